#pragma once

#include "agri/core/series.hpp"
#include "agri/ingest/ingest.hpp"
#include "agri/models/arima.hpp"
#include "agri/models/gbt.hpp"
#include "agri/models/lstm.hpp"
#include "agri/models/svr.hpp"
#include "agri/models/trend.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace agri::engine {

/// Declaration order is the tie-break order of select_best.
enum class Family { Arima, Trend, Svr, Gbt, Lstm };
enum class Mode { Univariate, Multivariate };

const std::vector<Family>& all_families();
std::string_view to_string(Family family);
std::string_view to_string(Mode mode);
/// Accepts the names printed by to_string; modes also accept "uni" and "multi".
Family parse_family(std::string_view text);
Mode parse_mode(std::string_view text);

using Hyperparameters = std::variant<arima::Order, trend::Params, svr::Params, gbt::Params, lstm::Params>;

struct ModelSpec {
	Family family = Family::Arima;
	Mode mode = Mode::Univariate;
	Hyperparameters hyper;

	/// Throws ErrorCode::InvalidSpec (e.g. multivariate ARIMA, or hyper not
	/// matching the family).
	void validate() const;
	std::string label() const;
};

struct Options {
	core::SplitSpec split;
	ingest::MissingPolicy policy;
	std::uint64_t seed = 27;
	/// Grid search before the final fit; off uses the family defaults.
	bool tune = true;
	/// Small budgets for smoke runs: fewer boosting rounds, a narrower and
	/// shorter LSTM.
	bool quick = false;
};

/// Family defaults under the given options.
ModelSpec default_spec(Family family, Mode mode, const Options& options = {});

/// Fitted model of any family.
class TrainedModel {
public:
	virtual ~TrainedModel() = default;

	/// ARIMA and trend models continue from their own training end and ignore
	/// `history`; window models read the tail of `history`.
	virtual std::vector<double> forecast(const core::FeatureFrame& history, std::size_t horizon) const = 0;
	virtual nlohmann::json to_json() const = 0;
	virtual std::vector<std::string> warnings() const {
		return {};
	}

	const ModelSpec& spec() const noexcept {
		return spec_;
	}

protected:
	explicit TrainedModel(ModelSpec spec) : spec_(std::move(spec)) {}

private:
	ModelSpec spec_;
};

/// Frame restricted to the columns the mode uses. Throws
/// ErrorCode::UnknownColumn listing absent exogenous columns in
/// multivariate mode.
core::FeatureFrame select_columns(const core::FeatureFrame& frame, Mode mode);

/// Missing-value policy; the result has no missing price cell.
core::FeatureFrame preprocess(const core::FeatureFrame& frame, ingest::MissingPolicy policy);

/// Fits on an already preprocessed frame.
std::unique_ptr<TrainedModel> fit(const ModelSpec& spec, const core::FeatureFrame& train);
/// Rebuilds a model from TrainedModel::to_json output. Throws ErrorCode::CorruptArtifact.
std::unique_ptr<TrainedModel> model_from_json(const ModelSpec& spec, const nlohmann::json& doc);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& doc);

/// MSE over the test rows that carry an observed price.
double observed_mse(const core::FeatureFrame& test, std::span<const double> forecast);

struct TuneResult {
	ModelSpec best;
	double best_score = 0.0;
	std::vector<std::pair<ModelSpec, double>> scores;
	std::vector<std::string> failures;
};

/// Grid candidates in canonical order. ARIMA draws its orders from the
/// stationarity suggestion on `frame` plus (1,1,1) and (2,1,1).
std::vector<ModelSpec> candidates(Family family, Mode mode, const core::FeatureFrame& frame, const Options& options);

/// Expanding-window CV mean MSE of one spec on a raw frame.
double cross_validate(const ModelSpec& spec, const core::FeatureFrame& frame, const Options& options);

/// Scores `grid` by cross_validate; the first lowest score wins. Throws
/// ErrorCode::GridExhausted when every candidate fails.
TuneResult tune(const std::vector<ModelSpec>& grid, const core::FeatureFrame& frame, const Options& options);
TuneResult tune(Family family, Mode mode, const core::FeatureFrame& frame, const Options& options);

struct TestResult {
	ModelSpec spec;
	double mse = 0.0;
	std::size_t train_rows = 0;
	std::size_t test_rows = 0;
	std::vector<std::string> warnings;
	std::shared_ptr<const TrainedModel> model;
	std::vector<double> forecast;
};

/// Holdout fit and test. Preprocessing runs on the training partition only;
/// the MSE is in price units over observed test prices.
TestResult train_and_test(const ModelSpec& spec, const core::FeatureFrame& frame, const Options& options);

struct Scored {
	ModelSpec spec;
	double mse = 0.0;
};

/// Lowest MSE; within kTieTolerance the earlier family (then mode) wins.
/// Throws ErrorCode::EmptyReport.
ModelSpec select_best(std::span<const Scored> scored);
Family select_best(const std::map<Family, double>& mse_by_family);

struct Cell {
	Family family = Family::Arima;
	Mode mode = Mode::Univariate;
	std::optional<TestResult> result;
	std::string error;
};

struct EvaluationReport {
	std::string commodity;
	std::vector<Cell> cells;
	std::optional<ModelSpec> winner;
	std::optional<double> winner_mse;
	core::SplitSpec split;
	std::uint64_t seed = 27;
	std::chrono::system_clock::time_point started;
	std::chrono::system_clock::time_point finished;
};

struct Dataset {
	std::string commodity;
	core::FeatureFrame frame;
};

/// Evaluates every family in every mode (ARIMA univariate only). A failing
/// cell records its error and the run continues.
std::vector<EvaluationReport> run_experiment(const std::vector<Dataset>& datasets, const std::vector<Mode>& modes,
                                             const Options& options);
EvaluationReport evaluate_commodity(const Dataset& dataset, const std::vector<Mode>& modes, const Options& options);

struct FinalModel {
	EvaluationReport report;
	std::shared_ptr<const TrainedModel> model;
	/// Preprocessed full frame the model was refitted on.
	core::FeatureFrame history;
	std::vector<double> forecast;
};

/// Evaluates every family in `mode`, selects the winner, refits it on the
/// full preprocessed frame and forecasts `horizon` weeks past its end.
/// Throws ErrorCode::GridExhausted when no family could be evaluated.
FinalModel train_final(const Dataset& dataset, Mode mode, const Options& options, std::size_t horizon);

inline constexpr std::string_view kReportHeader = "commodity,family,mode,mse,train_rows,test_rows,warnings";
void write_report_csv(std::ostream& out, const std::vector<EvaluationReport>& reports);
/// Commodities by family/mode grid of MSEs, winner marked with '*'.
std::string render_table(const std::vector<EvaluationReport>& reports);

} // namespace agri::engine
