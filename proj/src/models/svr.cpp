#include "agri/models/svr.hpp"

#include "agri/error.hpp"
#include "agri/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace agri::svr {

double Params::effective_gamma(std::size_t feature_count) const {
	if (gamma) {
		return *gamma;
	}
	return 1.0 / static_cast<double>(std::max<std::size_t>(feature_count, 1));
}

void Params::validate() const {
	if (!(c > 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "SVR C must be positive");
	}
	if (!(epsilon >= 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "SVR epsilon must be non-negative");
	}
	if (gamma && !(*gamma > 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "SVR gamma must be positive");
	}
	if (window < 1) {
		throw Error(ErrorCode::InvalidArgument, "SVR window must be at least 1");
	}
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
	if (x.size() != y.size()) {
		throw Error(ErrorCode::DimensionMismatch, "kernel arguments differ in dimension");
	}
	return std::exp(-gamma * simd::squared_distance(x, y));
}

namespace {

core::Matrix kernel_matrix(const core::Matrix& x, double gamma) {
	const std::size_t n = x.rows();
	core::Matrix k(n, n);
	const auto& kernels = simd::active();
	for (std::size_t i = 0; i < n; ++i) {
		k(i, i) = 1.0;
		for (std::size_t j = 0; j < i; ++j) {
			const double v = std::exp(-gamma * kernels.squared_distance(x.row(i).data(), x.row(j).data(), x.cols()));
			k(i, j) = v;
			k(j, i) = v;
		}
	}
	return k;
}

/// libsvm-style solver over 2n variables: index t < n is alpha_t (y = +1),
/// index t >= n is alpha*_{t-n} (y = -1).
class Solver {
public:
	Solver(const core::Matrix& kernel, std::span<const double> targets, double c, double epsilon)
	    : k_(kernel), n_(targets.size()), c_(c), alpha_(2 * n_, 0.0), grad_(2 * n_) {
		for (std::size_t i = 0; i < n_; ++i) {
			grad_[i] = epsilon - targets[i];
			grad_[i + n_] = epsilon + targets[i];
		}
		p_ = grad_;
	}

	void run(double tolerance, std::size_t max_iterations) {
		for (iterations_ = 0; iterations_ < max_iterations; ++iterations_) {
			std::size_t i = 0;
			std::size_t j = 0;
			if (!select(tolerance, i, j)) {
				return;
			}
			update(i, j);
		}
		double gmax = 0.0;
		std::size_t i = 0;
		std::size_t j = 0;
		if (select(tolerance, i, j, &gmax)) {
			throw Error(ErrorCode::NonConvergence, "SMO exceeded " + std::to_string(max_iterations) +
			                                           " iterations (KKT violation " + std::to_string(gmax) + ")");
		}
	}

	DualSolution solution() const {
		DualSolution out;
		out.alpha.assign(alpha_.begin(), alpha_.begin() + static_cast<long>(n_));
		out.alpha_star.assign(alpha_.begin() + static_cast<long>(n_), alpha_.end());
		out.coefficients.resize(n_);
		for (std::size_t i = 0; i < n_; ++i) {
			out.coefficients[i] = out.alpha[i] - out.alpha_star[i];
		}
		double objective = 0.0;
		for (std::size_t t = 0; t < 2 * n_; ++t) {
			objective += alpha_[t] * (grad_[t] + p_[t]);
		}
		out.objective = 0.5 * objective;
		out.bias = -rho();
		out.iterations = iterations_;
		out.max_violation = violation();
		return out;
	}

private:
	double y(std::size_t t) const {
		return t < n_ ? 1.0 : -1.0;
	}
	double q(std::size_t s, std::size_t t) const {
		return y(s) * y(t) * k_(s % n_, t % n_);
	}
	bool upper(std::size_t t) const {
		return alpha_[t] >= c_;
	}
	bool lower(std::size_t t) const {
		return alpha_[t] <= 0.0;
	}
	bool in_up(std::size_t t) const {
		return y(t) > 0 ? !upper(t) : !lower(t);
	}
	bool in_low(std::size_t t) const {
		return y(t) > 0 ? !lower(t) : !upper(t);
	}

	double violation() const {
		double gmax = -std::numeric_limits<double>::infinity();
		double gmax2 = -std::numeric_limits<double>::infinity();
		for (std::size_t t = 0; t < 2 * n_; ++t) {
			if (in_up(t)) {
				gmax = std::max(gmax, -y(t) * grad_[t]);
			}
			if (in_low(t)) {
				gmax2 = std::max(gmax2, y(t) * grad_[t]);
			}
		}
		return gmax + gmax2;
	}

	// Second-order working set selection (Fan, Chen & Lin 2005).
	bool select(double tolerance, std::size_t& out_i, std::size_t& out_j, double* gap = nullptr) const {
		constexpr double kTau = 1e-12;
		double gmax = -std::numeric_limits<double>::infinity();
		std::size_t gmax_idx = 2 * n_;
		for (std::size_t t = 0; t < 2 * n_; ++t) {
			if (in_up(t) && -y(t) * grad_[t] >= gmax) {
				gmax = -y(t) * grad_[t];
				gmax_idx = t;
			}
		}
		double gmax2 = -std::numeric_limits<double>::infinity();
		double obj_min = std::numeric_limits<double>::infinity();
		std::size_t gmin_idx = 2 * n_;
		for (std::size_t t = 0; t < 2 * n_; ++t) {
			if (!in_low(t)) {
				continue;
			}
			gmax2 = std::max(gmax2, y(t) * grad_[t]);
			if (gmax_idx == 2 * n_) {
				continue;
			}
			const double b = gmax + y(t) * grad_[t];
			if (b > 0.0) {
				const std::size_t i = gmax_idx;
				double a = k_(i % n_, i % n_) + k_(t % n_, t % n_) - 2.0 * k_(i % n_, t % n_);
				if (a <= 0.0) {
					a = kTau;
				}
				const double obj = -(b * b) / a;
				if (obj <= obj_min) {
					obj_min = obj;
					gmin_idx = t;
				}
			}
		}
		if (gap) {
			*gap = gmax + gmax2;
		}
		if (gmax + gmax2 < tolerance || gmin_idx == 2 * n_) {
			return false;
		}
		out_i = gmax_idx;
		out_j = gmin_idx;
		return true;
	}

	void update(std::size_t i, std::size_t j) {
		constexpr double kTau = 1e-12;
		const double old_ai = alpha_[i];
		const double old_aj = alpha_[j];
		const double qii = k_(i % n_, i % n_);
		const double qjj = k_(j % n_, j % n_);
		const double qij = q(i, j);
		if (y(i) != y(j)) {
			double quad = qii + qjj + 2.0 * qij;
			if (quad <= 0.0) {
				quad = kTau;
			}
			const double delta = (-grad_[i] - grad_[j]) / quad;
			const double diff = alpha_[i] - alpha_[j];
			alpha_[i] += delta;
			alpha_[j] += delta;
			if (diff > 0.0) {
				if (alpha_[j] < 0.0) {
					alpha_[j] = 0.0;
					alpha_[i] = diff;
				}
			} else if (alpha_[i] < 0.0) {
				alpha_[i] = 0.0;
				alpha_[j] = -diff;
			}
			if (diff > 0.0) {
				if (alpha_[i] > c_) {
					alpha_[i] = c_;
					alpha_[j] = c_ - diff;
				}
			} else if (alpha_[j] > c_) {
				alpha_[j] = c_;
				alpha_[i] = c_ + diff;
			}
		} else {
			double quad = qii + qjj - 2.0 * qij;
			if (quad <= 0.0) {
				quad = kTau;
			}
			const double delta = (grad_[i] - grad_[j]) / quad;
			const double sum = alpha_[i] + alpha_[j];
			alpha_[i] -= delta;
			alpha_[j] += delta;
			if (sum > c_) {
				if (alpha_[i] > c_) {
					alpha_[i] = c_;
					alpha_[j] = sum - c_;
				}
			} else if (alpha_[j] < 0.0) {
				alpha_[j] = 0.0;
				alpha_[i] = sum;
			}
			if (sum > c_) {
				if (alpha_[j] > c_) {
					alpha_[j] = c_;
					alpha_[i] = sum - c_;
				}
			} else if (alpha_[i] < 0.0) {
				alpha_[i] = 0.0;
				alpha_[j] = sum;
			}
		}
		const double dai = alpha_[i] - old_ai;
		const double daj = alpha_[j] - old_aj;
		for (std::size_t t = 0; t < 2 * n_; ++t) {
			grad_[t] += q(t, i) * dai + q(t, j) * daj;
		}
	}

	double rho() const {
		double ub = std::numeric_limits<double>::infinity();
		double lb = -std::numeric_limits<double>::infinity();
		double sum_free = 0.0;
		std::size_t free = 0;
		for (std::size_t t = 0; t < 2 * n_; ++t) {
			const double yg = y(t) * grad_[t];
			if (upper(t)) {
				if (y(t) < 0) {
					ub = std::min(ub, yg);
				} else {
					lb = std::max(lb, yg);
				}
			} else if (lower(t)) {
				if (y(t) > 0) {
					ub = std::min(ub, yg);
				} else {
					lb = std::max(lb, yg);
				}
			} else {
				++free;
				sum_free += yg;
			}
		}
		return free > 0 ? sum_free / static_cast<double>(free) : 0.5 * (ub + lb);
	}

	const core::Matrix& k_;
	std::size_t n_;
	double c_;
	std::vector<double> alpha_;
	std::vector<double> grad_;
	std::vector<double> p_;
	std::size_t iterations_ = 0;
};

} // namespace

DualSolution solve_dual(const core::Matrix& features, std::span<const double> targets, const Params& params) {
	params.validate();
	if (features.rows() != targets.size()) {
		throw Error(ErrorCode::DimensionMismatch, "feature rows and targets differ in count");
	}
	if (features.rows() < 2 || features.cols() == 0) {
		throw Error(ErrorCode::DegenerateInput, "SVR needs at least two rows and one feature");
	}
	for (double v : features.data()) {
		if (!std::isfinite(v)) {
			throw Error(ErrorCode::DegenerateInput, "features contain non-finite values");
		}
	}
	for (double v : targets) {
		if (!std::isfinite(v)) {
			throw Error(ErrorCode::DegenerateInput, "targets contain non-finite values");
		}
	}
	const auto kernel = kernel_matrix(features, params.effective_gamma(features.cols()));
	Solver solver(kernel, targets, params.c, params.epsilon);
	solver.run(params.tolerance, params.max_passes * 2 * targets.size());
	return solver.solution();
}

double dual_objective(const core::Matrix& features, std::span<const double> targets, const Params& params,
                      std::span<const double> alpha, std::span<const double> alpha_star) {
	const std::size_t n = targets.size();
	const double gamma = params.effective_gamma(features.cols());
	double quadratic = 0.0;
	double linear = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double ci = alpha[i] - alpha_star[i];
		linear += params.epsilon * (alpha[i] + alpha_star[i]) - targets[i] * ci;
		for (std::size_t j = 0; j < n; ++j) {
			quadratic += ci * (alpha[j] - alpha_star[j]) * rbf_kernel(features.row(i), features.row(j), gamma);
		}
	}
	return 0.5 * quadratic + linear;
}

Model::Model(core::Matrix support_vectors, std::vector<double> dual_coeffs, double bias, Params params, double gamma)
    : support_vectors_(std::move(support_vectors)), dual_coeffs_(std::move(dual_coeffs)), bias_(bias),
      params_(std::move(params)), gamma_(gamma), feature_count_(support_vectors_.cols()) {
	if (support_vectors_.rows() != dual_coeffs_.size()) {
		throw Error(ErrorCode::ShapeMismatch, "one dual coefficient per support vector required");
	}
}

double Model::predict_scaled(std::span<const double> row) const {
	if (row.size() != feature_count_) {
		throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(feature_count_) + " features, got " +
		                                              std::to_string(row.size()));
	}
	const auto& kernels = simd::active();
	double sum = bias_;
	for (std::size_t s = 0; s < dual_coeffs_.size(); ++s) {
		sum += dual_coeffs_[s] *
		       std::exp(-gamma_ * kernels.squared_distance(support_vectors_.row(s).data(), row.data(), row.size()));
	}
	return sum;
}

double Model::predict(std::span<const double> row) const {
	if (feature_ranges_.empty()) {
		return predict_scaled(row);
	}
	if (row.size() != feature_ranges_.size()) {
		throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(feature_ranges_.size()) +
		                                              " features, got " + std::to_string(row.size()));
	}
	std::vector<double> scaled(row.size());
	for (std::size_t i = 0; i < row.size(); ++i) {
		const auto& r = feature_ranges_[i];
		scaled[i] = (row[i] - r.min) / (r.max - r.min);
	}
	const double out = predict_scaled(scaled);
	const auto& t = *target_range_;
	return t.min + out * (t.max - t.min);
}

void Model::set_scaling(std::vector<core::MinMaxScaler::Range> feature_ranges, core::MinMaxScaler::Range target_range) {
	feature_ranges_ = std::move(feature_ranges);
	target_range_ = std::move(target_range);
	feature_count_ = feature_ranges_.size();
}

Model fit(const core::Matrix& features, std::span<const double> targets, const Params& params) {
	const auto dual = solve_dual(features, targets, params);
	core::Matrix support;
	std::vector<double> coeffs;
	for (std::size_t i = 0; i < dual.coefficients.size(); ++i) {
		if (dual.coefficients[i] != 0.0) {
			support.append_row(features.row(i));
			coeffs.push_back(dual.coefficients[i]);
		}
	}
	Model model(std::move(support), std::move(coeffs), dual.bias, params, params.effective_gamma(features.cols()));
	model.set_feature_count(features.cols());
	return model;
}

double predict(const Model& model, std::span<const double> row) {
	return model.predict(row);
}

FrameModel fit_frame(const core::FeatureFrame& train, const Params& params, bool multivariate) {
	const auto used = multivariate ? train : train.price_only();
	auto [scaled, scaler] = core::scale_fit_transform(used);
	const auto data = make_supervised(scaled, params.window, multivariate);
	FrameModel out{fit(data.features, data.targets, params), scaler, multivariate};
	std::vector<core::MinMaxScaler::Range> ranges(params.window, scaler.range(core::kPriceColumn));
	for (std::size_t c = 1; c < used.column_count(); ++c) {
		ranges.push_back(scaler.range(used.column_name(c)));
	}
	out.model.set_scaling(std::move(ranges), scaler.range(core::kPriceColumn));
	return out;
}

std::vector<double> forecast(const FrameModel& model, const core::FeatureFrame& history, std::size_t horizon) {
	const auto used = model.multivariate ? history : history.price_only();
	return models::recursive_forecast(used, model.model.params().window, model.multivariate, horizon,
	                                  [&](std::span<const double> row) { return model.model.predict(row); });
}

} // namespace agri::svr
