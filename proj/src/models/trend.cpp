#include "agri/models/trend.hpp"

#include "agri/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace agri::trend {

void Params::validate() const {
	if (!(changepoint_range > 0.0 && changepoint_range <= 1.0)) {
		throw Error(ErrorCode::InvalidArgument, "changepoint_range must lie in (0, 1]");
	}
	if (!(prior_scale > 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "prior_scale must be positive");
	}
	if (fourier_order < 1) {
		throw Error(ErrorCode::InvalidArgument, "fourier_order must be at least 1");
	}
	if (!(season_period > 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "season_period must be positive");
	}
}

const std::vector<double>& prior_scale_grid() {
	static const std::vector<double> grid{0.05, 0.5, 5.0, 10.0, 30.0};
	return grid;
}

namespace {

double days_since(core::Date date, core::Date origin) {
	return static_cast<double>((date - origin).count());
}

} // namespace

core::Matrix build_design_matrix(std::span<const core::Date> timestamps, const Timeline& timeline,
                                 std::span<const double> changepoints, const Params& params,
                                 const core::Matrix* exogenous) {
	const std::size_t extra = exogenous ? exogenous->cols() : 0;
	if (exogenous && exogenous->rows() != timestamps.size()) {
		throw Error(ErrorCode::DimensionMismatch, "exogenous rows do not match timestamps");
	}
	const std::size_t k = params.fourier_order;
	const std::size_t width = 2 + changepoints.size() + 2 * k + extra;
	core::Matrix x(timestamps.size(), width);
	for (std::size_t i = 0; i < timestamps.size(); ++i) {
		const double days = days_since(timestamps[i], timeline.origin);
		const double t = days / timeline.span_days;
		auto row = x.row(i);
		row[0] = 1.0;
		row[1] = t;
		std::size_t c = 2;
		for (const double cp : changepoints) {
			row[c++] = std::max(0.0, t - cp);
		}
		for (std::size_t h = 1; h <= k; ++h) {
			const double angle = 2.0 * std::numbers::pi * static_cast<double>(h) * days / params.season_period;
			row[c++] = std::sin(angle);
			row[c++] = std::cos(angle);
		}
		for (std::size_t e = 0; e < extra; ++e) {
			row[c++] = (*exogenous)(i, e);
		}
	}
	return x;
}

std::size_t default_changepoint_count(double span_days) {
	return static_cast<std::size_t>(std::floor(span_days / kDaysPerMonth + 1e-9));
}

std::vector<double> place_changepoints(std::span<const double> scaled_times, std::size_t changepoint_count,
                                       double changepoint_range) {
	const auto hist = static_cast<std::size_t>(std::floor(static_cast<double>(scaled_times.size()) * changepoint_range));
	std::vector<double> out;
	if (hist < 2 || changepoint_count == 0) {
		return out;
	}
	const std::size_t n = std::min(changepoint_count, hist - 1);
	const double last = static_cast<double>(hist - 1);
	for (std::size_t j = 1; j <= n; ++j) {
		const auto index = static_cast<std::size_t>(std::round(last * static_cast<double>(j) / static_cast<double>(n)));
		const double t = scaled_times[index];
		if (out.empty() || t > out.back()) {
			out.push_back(t);
		}
	}
	return out;
}

Model::Model(Timeline timeline, std::vector<double> changepoints, std::vector<double> coefficients, Params params,
             core::Date last_date, std::vector<core::MinMaxScaler::Range> exogenous_ranges,
             std::vector<double> last_exogenous)
    : timeline_(timeline), changepoints_(std::move(changepoints)), coefficients_(std::move(coefficients)),
      params_(std::move(params)), last_date_(last_date), exogenous_ranges_(std::move(exogenous_ranges)),
      last_exogenous_(std::move(last_exogenous)) {
	const std::size_t expected = 2 + changepoints_.size() + 2 * params_.fourier_order + exogenous_ranges_.size();
	if (coefficients_.size() != expected || last_exogenous_.size() != exogenous_ranges_.size()) {
		throw Error(ErrorCode::ShapeMismatch, "trend coefficients do not match the model layout");
	}
}

std::span<const double> Model::slope_deltas() const {
	return std::span<const double>(coefficients_).subspan(2, changepoints_.size());
}

std::span<const double> Model::seasonal_coeffs() const {
	return std::span<const double>(coefficients_).subspan(2 + changepoints_.size(), 2 * params_.fourier_order);
}

std::span<const double> Model::exogenous_coeffs() const {
	return std::span<const double>(coefficients_).subspan(2 + changepoints_.size() + 2 * params_.fourier_order);
}

std::vector<double> Model::changepoint_days() const {
	std::vector<double> out;
	for (const double cp : changepoints_) {
		out.push_back(cp * timeline_.span_days);
	}
	return out;
}

core::Matrix Model::design(std::span<const core::Date> timestamps, const core::Matrix* exogenous) const {
	if (!multivariate()) {
		return build_design_matrix(timestamps, timeline_, changepoints_, params_);
	}
	const std::size_t width = exogenous_ranges_.size();
	if (exogenous && exogenous->cols() != width) {
		throw Error(ErrorCode::DimensionMismatch, "exogenous width does not match the model");
	}
	core::Matrix scaled(timestamps.size(), width);
	for (std::size_t i = 0; i < timestamps.size(); ++i) {
		for (std::size_t e = 0; e < width; ++e) {
			const auto& r = exogenous_ranges_[e];
			const double raw = exogenous ? (*exogenous)(i, e) : last_exogenous_[e];
			scaled(i, e) = (raw - r.min) / (r.max - r.min);
		}
	}
	return build_design_matrix(timestamps, timeline_, changepoints_, params_, &scaled);
}

std::vector<double> Model::predict(std::span<const core::Date> timestamps, const core::Matrix* exogenous) const {
	const auto x = design(timestamps, exogenous);
	std::vector<double> out(x.rows(), 0.0);
	for (std::size_t i = 0; i < x.rows(); ++i) {
		const auto row = x.row(i);
		double s = 0.0;
		for (std::size_t c = 0; c < row.size(); ++c) {
			s += row[c] * coefficients_[c];
		}
		out[i] = s;
	}
	return out;
}

std::vector<double> Model::forecast(std::size_t horizon) const {
	if (horizon == 0) {
		throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
	}
	std::vector<core::Date> dates;
	for (std::size_t h = 1; h <= horizon; ++h) {
		dates.push_back(last_date_ + std::chrono::days(core::kDaysPerWeek * static_cast<int>(h)));
	}
	return predict(dates);
}

namespace {

Model fit_rows(const std::vector<core::Date>& dates, const std::vector<double>& prices,
               const core::Matrix* raw_exogenous, std::vector<core::MinMaxScaler::Range> ranges, const Params& params,
               FitSummary* summary) {
	params.validate();
	if (dates.size() < kMinPoints) {
		throw Error(ErrorCode::TooShort, "trend model needs at least " + std::to_string(kMinPoints) +
		                                     " valid weekly points, got " + std::to_string(dates.size()));
	}
	Timeline timeline{dates.front(), std::max(1.0, days_since(dates.back(), dates.front()))};
	std::vector<double> scaled_times;
	for (const auto d : dates) {
		scaled_times.push_back(days_since(d, timeline.origin) / timeline.span_days);
	}
	const std::size_t count = params.changepoint_count.value_or(default_changepoint_count(timeline.span_days));
	const auto changepoints = place_changepoints(scaled_times, count, params.changepoint_range);

	std::optional<core::Matrix> exo;
	if (raw_exogenous) {
		exo.emplace(raw_exogenous->rows(), raw_exogenous->cols());
		for (std::size_t i = 0; i < raw_exogenous->rows(); ++i) {
			for (std::size_t e = 0; e < raw_exogenous->cols(); ++e) {
				(*exo)(i, e) = ((*raw_exogenous)(i, e) - ranges[e].min) / (ranges[e].max - ranges[e].min);
			}
		}
	}
	const auto x = build_design_matrix(dates, timeline, changepoints, params, exo ? &*exo : nullptr);

	double scale = 0.0;
	for (const double p : prices) {
		scale = std::max(scale, std::abs(p));
	}
	if (scale == 0.0) {
		scale = 1.0;
	}
	const Eigen::Index n = static_cast<Eigen::Index>(x.rows());
	const Eigen::Index m = static_cast<Eigen::Index>(x.cols());
	const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> design(x.data().data(), n,
	                                                                                                      m);
	Eigen::VectorXd y(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		y[i] = prices[static_cast<std::size_t>(i)] / scale;
	}
	Eigen::MatrixXd gram = design.transpose() * design;
	const double lambda = 1.0 / (params.prior_scale * params.prior_scale);
	for (std::size_t j = 0; j < changepoints.size(); ++j) {
		gram(static_cast<Eigen::Index>(2 + j), static_cast<Eigen::Index>(2 + j)) += lambda;
	}
	const Eigen::VectorXd rhs = design.transpose() * y;
	const Eigen::LLT<Eigen::MatrixXd> llt(gram);
	if (llt.info() != Eigen::Success) {
		throw Error(ErrorCode::SingularSystem, "normal equations are not positive definite");
	}
	const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
	if (diag.minCoeff() <= 1e-10 * diag.maxCoeff()) {
		throw Error(ErrorCode::SingularSystem, "normal equations are numerically singular");
	}
	const Eigen::VectorXd beta = llt.solve(rhs);
	if (!beta.allFinite()) {
		throw Error(ErrorCode::SingularSystem, "trend solve produced non-finite coefficients");
	}

	std::vector<double> coefficients(static_cast<std::size_t>(m));
	for (Eigen::Index j = 0; j < m; ++j) {
		coefficients[static_cast<std::size_t>(j)] = beta[j] * scale;
	}
	if (summary) {
		const Eigen::VectorXd residual = (y - design * beta) * scale;
		summary->residual_ss = residual.squaredNorm();
		double penalty = 0.0;
		for (std::size_t j = 0; j < changepoints.size(); ++j) {
			penalty += lambda * beta[static_cast<Eigen::Index>(2 + j)] * beta[static_cast<Eigen::Index>(2 + j)];
		}
		summary->penalty = penalty;
		summary->rows = dates.size();
	}
	std::vector<double> last_exogenous;
	if (raw_exogenous) {
		const auto last = raw_exogenous->row(raw_exogenous->rows() - 1);
		last_exogenous.assign(last.begin(), last.end());
	}
	return Model(timeline, changepoints, std::move(coefficients), params, dates.back(), std::move(ranges),
	             std::move(last_exogenous));
}

} // namespace

Model fit(const core::Series& series, const Params& params, FitSummary* summary) {
	return fit(core::FeatureFrame(series), params, false, summary);
}

Model fit(const core::FeatureFrame& frame, const Params& params, bool multivariate, FitSummary* summary) {
	const std::size_t extra = multivariate ? frame.column_count() - 1 : 0;
	std::vector<core::Date> dates;
	std::vector<double> prices;
	std::vector<std::vector<double>> rows;
	for (std::size_t i = 0; i < frame.rows(); ++i) {
		const auto& price = frame.cells(0)[i];
		if (!price) {
			continue;
		}
		std::vector<double> row;
		bool complete = true;
		for (std::size_t e = 1; e <= extra; ++e) {
			const auto& cell = frame.cells(e)[i];
			if (!cell) {
				complete = false;
				break;
			}
			row.push_back(*cell);
		}
		if (!complete) {
			continue;
		}
		dates.push_back(frame.timestamps()[i]);
		prices.push_back(*price);
		rows.push_back(std::move(row));
	}
	if (extra == 0) {
		return fit_rows(dates, prices, nullptr, {}, params, summary);
	}
	core::Matrix exo(rows.size(), extra);
	std::vector<core::MinMaxScaler::Range> ranges;
	for (std::size_t e = 0; e < extra; ++e) {
		core::MinMaxScaler::Range r{frame.column_name(e + 1), 0.0, 0.0};
		for (std::size_t i = 0; i < rows.size(); ++i) {
			exo(i, e) = rows[i][e];
			r.min = i == 0 ? rows[i][e] : std::min(r.min, rows[i][e]);
			r.max = i == 0 ? rows[i][e] : std::max(r.max, rows[i][e]);
		}
		if (!(r.max > r.min)) {
			throw Error(ErrorCode::ConstantColumn, "column '" + r.name + "' is constant over the training rows");
		}
		ranges.push_back(std::move(r));
	}
	return fit_rows(dates, prices, &exo, std::move(ranges), params, summary);
}

std::vector<double> forecast(const Model& model, std::size_t horizon) {
	return model.forecast(horizon);
}

} // namespace agri::trend
