#include "agri/engine/engine.hpp"

#include "agri/error.hpp"
#include "agri/stationarity/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

namespace agri::engine {

const std::vector<Family>& all_families() {
	static const std::vector<Family> families{Family::Arima, Family::Trend, Family::Svr, Family::Gbt, Family::Lstm};
	return families;
}

std::string_view to_string(Family family) {
	switch (family) {
	case Family::Arima:
		return "arima";
	case Family::Trend:
		return "trend";
	case Family::Svr:
		return "svr";
	case Family::Gbt:
		return "gbt";
	case Family::Lstm:
		return "lstm";
	}
	return "unknown";
}

std::string_view to_string(Mode mode) {
	return mode == Mode::Univariate ? "univariate" : "multivariate";
}

Family parse_family(std::string_view text) {
	for (const auto f : all_families()) {
		if (to_string(f) == text) {
			return f;
		}
	}
	throw Error(ErrorCode::InvalidSpec, "unknown model family '" + std::string(text) + "'");
}

Mode parse_mode(std::string_view text) {
	if (text == "univariate" || text == "uni") {
		return Mode::Univariate;
	}
	if (text == "multivariate" || text == "multi") {
		return Mode::Multivariate;
	}
	throw Error(ErrorCode::InvalidSpec, "unknown mode '" + std::string(text) + "'");
}

void ModelSpec::validate() const {
	if (family == Family::Arima && mode == Mode::Multivariate) {
		throw Error(ErrorCode::InvalidSpec, "arima supports univariate mode only");
	}
	if (hyper.index() != static_cast<std::size_t>(family)) {
		throw Error(ErrorCode::InvalidSpec, "hyperparameters do not belong to family " + std::string(to_string(family)));
	}
	std::visit([](const auto& h) { h.validate(); }, hyper);
}

std::string ModelSpec::label() const {
	std::string out(to_string(family));
	out += mode == Mode::Univariate ? "/uni" : "/multi";
	std::visit(
	    [&](const auto& h) {
		    using T = std::decay_t<decltype(h)>;
		    char buf[64];
		    if constexpr (std::is_same_v<T, arima::Order>) {
			    out += h.to_string();
		    } else if constexpr (std::is_same_v<T, trend::Params>) {
			    std::snprintf(buf, sizeof buf, "(prior_scale=%g)", h.prior_scale);
			    out += buf;
		    } else if constexpr (std::is_same_v<T, svr::Params>) {
			    std::snprintf(buf, sizeof buf, "(C=%g)", h.c);
			    out += buf;
		    } else if constexpr (std::is_same_v<T, gbt::Params>) {
			    std::snprintf(buf, sizeof buf, "(lr=%g)", h.learning_rate);
			    out += buf;
		    } else {
			    std::snprintf(buf, sizeof buf, "(dropout=%g)", h.dropout_rate);
			    out += buf;
		    }
	    },
	    hyper);
	return out;
}

ModelSpec default_spec(Family family, Mode mode, const Options& options) {
	ModelSpec spec{family, mode, arima::Order{}};
	switch (family) {
	case Family::Arima:
		break;
	case Family::Trend:
		spec.hyper = trend::Params{};
		break;
	case Family::Svr:
		spec.hyper = svr::Params{};
		break;
	case Family::Gbt: {
		gbt::Params p;
		p.seed = options.seed;
		if (options.quick) {
			p.n_estimators = 100;
			p.early_stopping_rounds = 20;
		}
		spec.hyper = p;
		break;
	}
	case Family::Lstm: {
		lstm::Params p;
		p.seed = options.seed;
		if (options.quick) {
			p.epochs = 3;
			p.layers = 2;
			p.hidden_size = 8;
		}
		spec.hyper = p;
		break;
	}
	}
	return spec;
}

core::FeatureFrame select_columns(const core::FeatureFrame& frame, Mode mode) {
	if (mode == Mode::Univariate) {
		return frame.price_only();
	}
	std::string missing;
	for (const auto& name : core::exogenous_names()) {
		if (!frame.has_column(name)) {
			missing += missing.empty() ? name : ", " + name;
		}
	}
	if (!missing.empty()) {
		throw Error(ErrorCode::UnknownColumn, "multivariate mode needs exogenous columns; absent: " + missing);
	}
	return frame;
}

core::FeatureFrame preprocess(const core::FeatureFrame& frame, ingest::MissingPolicy policy) {
	return ingest::apply_missing_policy(frame, policy);
}

double observed_mse(const core::FeatureFrame& test, std::span<const double> forecast) {
	if (forecast.size() != test.rows()) {
		throw Error(ErrorCode::LengthMismatch, "forecast length differs from the test rows");
	}
	std::vector<double> actual;
	std::vector<double> predicted;
	const auto& cells = test.cells(0);
	for (std::size_t i = 0; i < cells.size(); ++i) {
		if (cells[i]) {
			actual.push_back(*cells[i]);
			predicted.push_back(forecast[i]);
		}
	}
	if (actual.empty()) {
		throw Error(ErrorCode::EmptyData, "no observed prices in the test partition");
	}
	return core::mse(actual, predicted);
}

namespace {

/// Fit on the preprocessed train part, score on the raw test part.
double score_partition(const ModelSpec& spec, const core::Partition& part, const Options& options,
                       std::vector<double>* forecast_out = nullptr, std::shared_ptr<const TrainedModel>* model_out = nullptr) {
	const auto train = preprocess(select_columns(part.train, spec.mode), options.policy);
	std::shared_ptr<const TrainedModel> model = fit(spec, train);
	auto forecast = model->forecast(train, part.test.rows());
	for (const double v : forecast) {
		if (!std::isfinite(v)) {
			throw Error(ErrorCode::NumericalBreakdown, "non-finite forecast from " + spec.label());
		}
	}
	const double mse = observed_mse(part.test, forecast);
	if (forecast_out) {
		*forecast_out = std::move(forecast);
	}
	if (model_out) {
		*model_out = std::move(model);
	}
	return mse;
}

} // namespace

std::vector<ModelSpec> candidates(Family family, Mode mode, const core::FeatureFrame& frame, const Options& options) {
	const ModelSpec base = default_spec(family, mode, options);
	std::vector<ModelSpec> out;
	switch (family) {
	case Family::Arima: {
		std::set<arima::Order> orders{{1, 1, 1}, {2, 1, 1}};
		try {
			const auto filled = preprocess(frame.price_only(), options.policy);
			const auto s = stationarity::suggest_order(filled.base());
			for (const auto p : s.p_candidates) {
				const arima::Order o{p, s.d, s.q};
				if (o.valid()) {
					orders.insert(o);
				}
			}
		} catch (const Error&) {
			// Suggestion failures leave the fixed orders.
		}
		for (const auto& o : orders) {
			out.push_back({family, mode, o});
		}
		break;
	}
	case Family::Trend:
		for (const double s : trend::prior_scale_grid()) {
			auto p = std::get<trend::Params>(base.hyper);
			p.prior_scale = s;
			out.push_back({family, mode, p});
		}
		break;
	case Family::Svr:
		for (const double c : {0.1, 1.0, 10.0, 100.0}) {
			auto p = std::get<svr::Params>(base.hyper);
			p.c = c;
			out.push_back({family, mode, p});
		}
		break;
	case Family::Gbt:
		for (const double lr : {0.05, 0.1, 0.3}) {
			auto p = std::get<gbt::Params>(base.hyper);
			p.learning_rate = lr;
			out.push_back({family, mode, p});
		}
		break;
	case Family::Lstm:
		for (const double rate : lstm::dropout_grid()) {
			auto p = std::get<lstm::Params>(base.hyper);
			p.dropout_rate = rate;
			out.push_back({family, mode, p});
		}
		break;
	}
	return out;
}

double cross_validate(const ModelSpec& spec, const core::FeatureFrame& frame, const Options& options) {
	core::SplitSpec cv = options.split;
	cv.mode = core::SplitMode::ExpandingWindow;
	const auto folds = core::expanding_window_split(frame, cv);
	double total = 0.0;
	for (const auto& part : folds) {
		total += score_partition(spec, part, options);
	}
	return total / static_cast<double>(folds.size());
}

TuneResult tune(const std::vector<ModelSpec>& grid, const core::FeatureFrame& frame, const Options& options) {
	TuneResult out;
	bool found = false;
	for (const auto& spec : grid) {
		try {
			const double score = cross_validate(spec, frame, options);
			out.scores.emplace_back(spec, score);
			if (!found || score < out.best_score - core::kTieTolerance) {
				out.best = spec;
				out.best_score = score;
				found = true;
			}
		} catch (const Error& e) {
			out.failures.push_back(spec.label() + ": " + e.what());
		}
	}
	if (!found) {
		std::string detail;
		for (const auto& f : out.failures) {
			detail += detail.empty() ? f : "; " + f;
		}
		throw Error(ErrorCode::GridExhausted, "every candidate failed: " + detail);
	}
	return out;
}

TuneResult tune(Family family, Mode mode, const core::FeatureFrame& frame, const Options& options) {
	return tune(candidates(family, mode, frame, options), frame, options);
}

TestResult train_and_test(const ModelSpec& spec, const core::FeatureFrame& frame, const Options& options) {
	spec.validate();
	core::SplitSpec holdout = options.split;
	holdout.mode = core::SplitMode::Holdout;
	const auto part = core::holdout_split(frame, holdout);
	TestResult out;
	out.spec = spec;
	out.train_rows = part.train.rows();
	out.test_rows = part.test.rows();
	out.mse = score_partition(spec, part, options, &out.forecast, &out.model);
	out.warnings = out.model->warnings();
	if (spec.family == Family::Svr && options.policy.strategy == ingest::MissingStrategy::SentinelFill) {
		out.warnings.push_back("sentinel fill distorts kernel distances; forward fill recommended");
	}
	return out;
}

ModelSpec select_best(std::span<const Scored> scored) {
	if (scored.empty()) {
		throw Error(ErrorCode::EmptyReport, "no scored models to select from");
	}
	const Scored* best = &scored.front();
	for (const auto& s : scored.subspan(1)) {
		const bool lower = s.mse < best->mse - core::kTieTolerance;
		const bool tie = std::abs(s.mse - best->mse) <= core::kTieTolerance;
		const bool earlier = std::pair(s.spec.family, s.spec.mode) < std::pair(best->spec.family, best->spec.mode);
		if (lower || (tie && earlier)) {
			best = &s;
		}
	}
	return best->spec;
}

Family select_best(const std::map<Family, double>& mse_by_family) {
	std::vector<Scored> scored;
	for (const auto& [family, mse] : mse_by_family) {
		scored.push_back({default_spec(family, Mode::Univariate), mse});
	}
	return select_best(scored).family;
}

EvaluationReport evaluate_commodity(const Dataset& dataset, const std::vector<Mode>& modes, const Options& options) {
	EvaluationReport report;
	report.commodity = dataset.commodity;
	report.split = options.split;
	report.seed = options.seed;
	report.started = std::chrono::system_clock::now();
	std::vector<Scored> scored;
	for (const auto mode : modes) {
		for (const auto family : all_families()) {
			if (family == Family::Arima && mode == Mode::Multivariate) {
				continue;
			}
			Cell cell{family, mode, std::nullopt, {}};
			try {
				ModelSpec spec = default_spec(family, mode, options);
				if (options.tune) {
					const auto train_rows = core::holdout_train_rows(dataset.frame.rows(), options.split.train_fraction);
					spec = tune(family, mode, dataset.frame.slice(0, train_rows), options).best;
				}
				cell.result = train_and_test(spec, dataset.frame, options);
				scored.push_back({spec, cell.result->mse});
			} catch (const Error& e) {
				cell.error = e.what();
			}
			report.cells.push_back(std::move(cell));
		}
	}
	if (!scored.empty()) {
		report.winner = select_best(scored);
		for (const auto& s : scored) {
			if (s.spec.family == report.winner->family && s.spec.mode == report.winner->mode) {
				report.winner_mse = s.mse;
			}
		}
	}
	report.finished = std::chrono::system_clock::now();
	return report;
}

std::vector<EvaluationReport> run_experiment(const std::vector<Dataset>& datasets, const std::vector<Mode>& modes,
                                             const Options& options) {
	std::vector<EvaluationReport> out;
	for (const auto& d : datasets) {
		out.push_back(evaluate_commodity(d, modes, options));
	}
	return out;
}

FinalModel train_final(const Dataset& dataset, Mode mode, const Options& options, std::size_t horizon) {
	FinalModel out;
	out.report = evaluate_commodity(dataset, {mode}, options);
	if (!out.report.winner) {
		std::string detail;
		for (const auto& cell : out.report.cells) {
			detail += detail.empty() ? cell.error : "; " + cell.error;
		}
		throw Error(ErrorCode::GridExhausted, "no model could be trained: " + detail);
	}
	out.history = preprocess(select_columns(dataset.frame, mode), options.policy);
	out.model = fit(*out.report.winner, out.history);
	out.forecast = out.model->forecast(out.history, horizon);
	return out;
}

namespace {

std::string csv_field(const std::string& text) {
	if (text.find_first_of(",\"\n") == std::string::npos) {
		return text;
	}
	std::string out = "\"";
	for (const char c : text) {
		out += c == '"' ? std::string("\"\"") : std::string(1, c);
	}
	return out + "\"";
}

std::string format_mse(double mse) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.6g", mse);
	return buf;
}

} // namespace

void write_report_csv(std::ostream& out, const std::vector<EvaluationReport>& reports) {
	out << kReportHeader << '\n';
	for (const auto& r : reports) {
		for (const auto& cell : r.cells) {
			out << csv_field(r.commodity) << ',' << to_string(cell.family) << ',' << to_string(cell.mode) << ',';
			if (cell.result) {
				std::string warnings;
				for (const auto& w : cell.result->warnings) {
					warnings += warnings.empty() ? w : "; " + w;
				}
				out << format_mse(cell.result->mse) << ',' << cell.result->train_rows << ',' << cell.result->test_rows
				    << ',' << csv_field(warnings);
			} else {
				out << ",,," << csv_field("error: " + cell.error);
			}
			out << '\n';
		}
	}
}

std::string render_table(const std::vector<EvaluationReport>& reports) {
	std::vector<std::pair<Family, Mode>> columns;
	for (const auto& r : reports) {
		for (const auto& c : r.cells) {
			const std::pair key(c.family, c.mode);
			if (std::find(columns.begin(), columns.end(), key) == columns.end()) {
				columns.push_back(key);
			}
		}
	}
	std::sort(columns.begin(), columns.end(), [](const auto& a, const auto& b) {
		return std::pair(a.second, a.first) < std::pair(b.second, b.first);
	});
	std::ostringstream out;
	char buf[64];
	std::snprintf(buf, sizeof buf, "%-12s", "commodity");
	out << buf;
	for (const auto& [family, mode] : columns) {
		const std::string head = std::string(to_string(family)) + (mode == Mode::Univariate ? "/uni" : "/multi");
		std::snprintf(buf, sizeof buf, " %13s", head.c_str());
		out << buf;
	}
	out << '\n';
	for (const auto& r : reports) {
		std::snprintf(buf, sizeof buf, "%-12s", r.commodity.c_str());
		out << buf;
		for (const auto& key : columns) {
			std::string text = "-";
			for (const auto& c : r.cells) {
				if (std::pair(c.family, c.mode) != key) {
					continue;
				}
				if (!c.result) {
					text = "failed";
					break;
				}
				std::snprintf(buf, sizeof buf, "%.4f", c.result->mse);
				text = buf;
				if (r.winner && r.winner->family == c.family && r.winner->mode == c.mode) {
					text += "*";
				}
			}
			std::snprintf(buf, sizeof buf, " %13s", text.c_str());
			out << buf;
		}
		out << '\n';
	}
	return out.str();
}

} // namespace agri::engine
