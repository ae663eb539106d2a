#pragma once

#include "agri/core/matrix.hpp"
#include "agri/core/series.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agri::trend {

inline constexpr std::size_t kMinPoints = 104;
inline constexpr double kDaysPerMonth = 30.4375;

struct Params {
	/// Defaults to one changepoint per month of training span.
	std::optional<std::size_t> changepoint_count;
	double changepoint_range = 0.8;
	double prior_scale = 0.05;
	std::size_t fourier_order = 10;
	double season_period = 365.25;

	void validate() const;
};

/// Grid searched by the engine.
const std::vector<double>& prior_scale_grid();

/// Time axis of a fitted model. `t` is days since `origin` divided by
/// `span_days`; seasonal terms use days since `origin`.
struct Timeline {
	core::Date origin;
	double span_days = 1.0;
};

/// Columns: [1, t, max(0, t - cp_j) ..., sin(2 pi k d / P), cos(2 pi k d / P) for k = 1..K],
/// followed by any exogenous columns passed in `exogenous` (row-major, one row per timestamp).
core::Matrix build_design_matrix(std::span<const core::Date> timestamps, const Timeline& timeline,
                                 std::span<const double> changepoints, const Params& params,
                                 const core::Matrix* exogenous = nullptr);

/// Changepoint positions in scaled time for `count` valid rows with the given
/// scaled times: linspace(0, floor(range*count) - 1, n + 1).round()[1:], deduplicated.
std::vector<double> place_changepoints(std::span<const double> scaled_times, std::size_t changepoint_count,
                                       double changepoint_range);
std::size_t default_changepoint_count(double span_days);

class Model {
public:
	Model() = default;
	/// `coefficients` are in price units against build_design_matrix columns.
	Model(Timeline timeline, std::vector<double> changepoints, std::vector<double> coefficients, Params params,
	      core::Date last_date, std::vector<core::MinMaxScaler::Range> exogenous_ranges = {},
	      std::vector<double> last_exogenous = {});

	double base_intercept() const {
		return coefficients_.at(0);
	}
	/// Slope per unit of scaled time.
	double base_slope() const {
		return coefficients_.at(1);
	}
	double slope_per_day() const {
		return coefficients_.at(1) / timeline_.span_days;
	}
	std::span<const double> slope_deltas() const;
	std::span<const double> seasonal_coeffs() const;
	std::span<const double> exogenous_coeffs() const;

	const Timeline& timeline() const noexcept {
		return timeline_;
	}
	const std::vector<double>& changepoints() const noexcept {
		return changepoints_;
	}
	/// Changepoints as day offsets from the origin.
	std::vector<double> changepoint_days() const;
	const std::vector<double>& coefficients() const noexcept {
		return coefficients_;
	}
	const Params& params() const noexcept {
		return params_;
	}
	core::Date last_date() const noexcept {
		return last_date_;
	}
	const std::vector<core::MinMaxScaler::Range>& exogenous_ranges() const noexcept {
		return exogenous_ranges_;
	}
	const std::vector<double>& last_exogenous() const noexcept {
		return last_exogenous_;
	}
	bool multivariate() const noexcept {
		return !exogenous_ranges_.empty();
	}

	/// Design rows for the timestamps; exogenous columns take `exogenous`
	/// (raw units) when given, else the last training values.
	core::Matrix design(std::span<const core::Date> timestamps, const core::Matrix* exogenous = nullptr) const;
	std::vector<double> predict(std::span<const core::Date> timestamps, const core::Matrix* exogenous = nullptr) const;
	/// Weekly steps after the last training date.
	std::vector<double> forecast(std::size_t horizon) const;

private:
	Timeline timeline_;
	std::vector<double> changepoints_;
	std::vector<double> coefficients_;
	Params params_;
	core::Date last_date_{};
	std::vector<core::MinMaxScaler::Range> exogenous_ranges_;
	std::vector<double> last_exogenous_;
};

struct FitSummary {
	/// Sum of squared residuals on the fitted rows, price units.
	double residual_ss = 0.0;
	double penalty = 0.0;
	std::size_t rows = 0;
};

/// Ridge fit with only slope deltas penalized (weight 1/prior_scale^2, on
/// scaled targets). Rows with a missing price are skipped. Throws
/// ErrorCode::TooShort or ErrorCode::SingularSystem.
Model fit(const core::Series& series, const Params& params, FitSummary* summary = nullptr);
/// Multivariate variant: exogenous columns enter unpenalized after minmax
/// scaling; rows with any missing cell are skipped.
Model fit(const core::FeatureFrame& frame, const Params& params, bool multivariate, FitSummary* summary = nullptr);

std::vector<double> forecast(const Model& model, std::size_t horizon);

} // namespace agri::trend
