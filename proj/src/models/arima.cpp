#include "agri/models/arima.hpp"

#include "agri/core/matrix.hpp"
#include "agri/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace agri::arima {

bool Order::valid() const noexcept {
	return p <= kMaxP && d <= kMaxD && q <= kMaxQ && (p + q >= 1 || d >= 1);
}

void Order::validate() const {
	if (!valid()) {
		throw Error(ErrorCode::InvalidArgument, "invalid ARIMA order " + to_string());
	}
}

std::string Order::to_string() const {
	return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
}

namespace {

using Complex = std::complex<double>;

constexpr double kMaxRootModulus = 0.9999;

/// Eigenvalues of the companion matrix of z^k + a_1 z^{k-1} + ... + a_k.
std::vector<Complex> companion_roots(std::span<const double> a) {
	const auto k = static_cast<Eigen::Index>(a.size());
	if (k == 0) {
		return {};
	}
	Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
	for (Eigen::Index j = 0; j < k; ++j) {
		companion(0, j) = -a[static_cast<std::size_t>(j)];
	}
	for (Eigen::Index i = 1; i < k; ++i) {
		companion(i, i - 1) = 1.0;
	}
	Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
	std::vector<Complex> roots;
	for (Eigen::Index i = 0; i < k; ++i) {
		roots.push_back(solver.eigenvalues()(i));
	}
	return roots;
}

/// Coefficients a_1..a_k of prod (z - r_i).
std::vector<double> from_roots(const std::vector<Complex>& roots) {
	std::vector<Complex> poly{1.0};
	for (const auto& r : roots) {
		std::vector<Complex> next(poly.size() + 1, 0.0);
		for (std::size_t i = 0; i < poly.size(); ++i) {
			next[i] += poly[i];
			next[i + 1] -= poly[i] * r;
		}
		poly = std::move(next);
	}
	std::vector<double> out(roots.size());
	for (std::size_t i = 0; i < out.size(); ++i) {
		out[i] = poly[i + 1].real();
	}
	return out;
}

bool reciprocal_roots_inside(std::span<const double> a) {
	for (const auto& r : companion_roots(a)) {
		if (std::abs(r) >= 1.0) {
			return false;
		}
	}
	return true;
}

std::vector<double> reflect(std::span<const double> a) {
	auto roots = companion_roots(a);
	bool changed = false;
	for (auto& r : roots) {
		double modulus = std::abs(r);
		if (modulus > 1.0) {
			r = 1.0 / std::conj(r);
			modulus = std::abs(r);
			changed = true;
		}
		if (modulus > kMaxRootModulus) {
			r *= kMaxRootModulus / modulus;
			changed = true;
		}
	}
	if (!changed) {
		return {a.begin(), a.end()};
	}
	return from_roots(roots);
}

std::vector<double> negated(std::span<const double> v) {
	std::vector<double> out(v.size());
	std::transform(v.begin(), v.end(), out.begin(), [](double x) { return -x; });
	return out;
}

struct Parameters {
	double intercept = 0.0;
	std::vector<double> ar;
	std::vector<double> ma;
};

Parameters project(Parameters params) {
	params.ar = reflect_ar(params.ar);
	params.ma = reflect_ma(params.ma);
	return params;
}

double sum_of_squares(std::span<const double> e, std::size_t start) {
	double s = 0.0;
	for (std::size_t t = start; t < e.size(); ++t) {
		s += e[t] * e[t];
	}
	return s;
}

/// Hannan-Rissanen: long autoregression for innovations, then OLS on lags of
/// w and of the estimated innovations.
Parameters initial_estimate(std::span<const double> w, const Order& order, bool intercept) {
	const std::size_t n = w.size();
	const std::size_t p = order.p;
	const std::size_t q = order.q;
	const std::size_t k0 = intercept ? 1 : 0;
	std::vector<double> innovations(n, 0.0);
	std::size_t start = p;
	if (q > 0) {
		const std::size_t m = std::min<std::size_t>(std::max(p, q) + 8, n / 4);
		core::Matrix x(n - m, k0 + m);
		std::vector<double> y(n - m);
		for (std::size_t t = m; t < n; ++t) {
			if (intercept) {
				x(t - m, 0) = 1.0;
			}
			for (std::size_t i = 0; i < m; ++i) {
				x(t - m, k0 + i) = w[t - 1 - i];
			}
			y[t - m] = w[t];
		}
		const auto long_ar = core::ols(x, y);
		for (std::size_t t = m; t < n; ++t) {
			innovations[t] = long_ar.residuals[t - m];
		}
		start = std::max(p, m + q);
	}
	core::Matrix x(n - start, k0 + p + q);
	std::vector<double> y(n - start);
	for (std::size_t t = start; t < n; ++t) {
		const std::size_t r = t - start;
		if (intercept) {
			x(r, 0) = 1.0;
		}
		for (std::size_t i = 0; i < p; ++i) {
			x(r, k0 + i) = w[t - 1 - i];
		}
		for (std::size_t j = 0; j < q; ++j) {
			x(r, k0 + p + j) = innovations[t - 1 - j];
		}
		y[r] = w[t];
	}
	const auto fit = core::ols(x, y);
	Parameters params;
	params.intercept = intercept ? fit.coefficients[0] : 0.0;
	params.ar.assign(fit.coefficients.begin() + static_cast<long>(k0),
	                 fit.coefficients.begin() + static_cast<long>(k0 + p));
	params.ma.assign(fit.coefficients.begin() + static_cast<long>(k0 + p), fit.coefficients.end());
	return project(std::move(params));
}

/// Residuals and their Jacobian with respect to [c, ar..., ma...].
void residuals_and_jacobian(std::span<const double> w, const Parameters& params, bool intercept,
                            std::vector<double>& e, Eigen::MatrixXd& jac) {
	const std::size_t n = w.size();
	const std::size_t p = params.ar.size();
	const std::size_t q = params.ma.size();
	const std::size_t k0 = intercept ? 1 : 0;
	const std::size_t k = k0 + p + q;
	e.assign(n, 0.0);
	jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
	for (std::size_t t = p; t < n; ++t) {
		double value = w[t] - params.intercept;
		for (std::size_t i = 0; i < p; ++i) {
			value -= params.ar[i] * w[t - 1 - i];
		}
		for (std::size_t j = 0; j < q && j + 1 + p <= t; ++j) {
			value -= params.ma[j] * e[t - 1 - j];
		}
		e[t] = value;
		const auto row = static_cast<Eigen::Index>(t);
		if (intercept) {
			jac(row, 0) = -1.0;
		}
		for (std::size_t i = 0; i < p; ++i) {
			jac(row, static_cast<Eigen::Index>(k0 + i)) = -w[t - 1 - i];
		}
		for (std::size_t j = 0; j < q && j + 1 + p <= t; ++j) {
			jac(row, static_cast<Eigen::Index>(k0 + p + j)) -= e[t - 1 - j];
		}
		for (std::size_t j = 0; j < q && j + 1 + p <= t; ++j) {
			jac.row(row) -= params.ma[j] * jac.row(static_cast<Eigen::Index>(t - 1 - j));
		}
	}
}

Parameters unpack(const Eigen::VectorXd& beta, std::size_t p, std::size_t q, bool intercept) {
	Parameters params;
	const std::size_t k0 = intercept ? 1 : 0;
	params.intercept = intercept ? beta(0) : 0.0;
	for (std::size_t i = 0; i < p; ++i) {
		params.ar.push_back(beta(static_cast<Eigen::Index>(k0 + i)));
	}
	for (std::size_t j = 0; j < q; ++j) {
		params.ma.push_back(beta(static_cast<Eigen::Index>(k0 + p + j)));
	}
	return params;
}

Eigen::VectorXd pack(const Parameters& params, bool intercept) {
	const std::size_t k0 = intercept ? 1 : 0;
	Eigen::VectorXd beta(static_cast<Eigen::Index>(k0 + params.ar.size() + params.ma.size()));
	if (intercept) {
		beta(0) = params.intercept;
	}
	for (std::size_t i = 0; i < params.ar.size(); ++i) {
		beta(static_cast<Eigen::Index>(k0 + i)) = params.ar[i];
	}
	for (std::size_t j = 0; j < params.ma.size(); ++j) {
		beta(static_cast<Eigen::Index>(k0 + params.ar.size() + j)) = params.ma[j];
	}
	return beta;
}

} // namespace

bool is_stationary(std::span<const double> ar) {
	return reciprocal_roots_inside(negated(ar));
}

bool is_invertible(std::span<const double> ma) {
	return reciprocal_roots_inside(ma);
}

std::vector<double> reflect_ar(std::span<const double> ar) {
	return negated(reflect(negated(ar)));
}

std::vector<double> reflect_ma(std::span<const double> ma) {
	return reflect(ma);
}

std::vector<double> css_residuals(std::span<const double> w, double intercept, std::span<const double> ar,
                                  std::span<const double> ma) {
	const std::size_t p = ar.size();
	const std::size_t q = ma.size();
	std::vector<double> e(w.size(), 0.0);
	for (std::size_t t = p; t < w.size(); ++t) {
		double value = w[t] - intercept;
		for (std::size_t i = 0; i < p; ++i) {
			value -= ar[i] * w[t - 1 - i];
		}
		for (std::size_t j = 0; j < q && j + 1 + p <= t; ++j) {
			value -= ma[j] * e[t - 1 - j];
		}
		e[t] = value;
	}
	return e;
}

Model::Model(State state) : state_(std::move(state)) {
	if (state_.ar.size() != state_.order.p || state_.ma.size() != state_.order.q ||
	    state_.level_anchors.size() != state_.order.d || state_.w_tail.size() != state_.order.p ||
	    state_.residual_tail.size() != state_.order.q) {
		throw Error(ErrorCode::ShapeMismatch, "ARIMA state does not match order " + state_.order.to_string());
	}
}

double Model::aic() const {
	const double n = static_cast<double>(state_.nobs);
	const double k = static_cast<double>(state_.order.p + state_.order.q + 1 + 1);
	return n * std::log(std::max(state_.css, std::numeric_limits<double>::min()) / n) + 2.0 * k;
}

std::vector<double> Model::forecast(std::size_t horizon) const {
	if (horizon < 1) {
		throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
	}
	const auto& s = state_;
	const std::size_t p = s.order.p;
	const std::size_t q = s.order.q;
	// history[k] holds w values, oldest first; future innovations are zero.
	std::vector<double> w(s.w_tail);
	std::vector<double> e(s.residual_tail);
	std::vector<double> out;
	out.reserve(horizon);
	for (std::size_t h = 0; h < horizon; ++h) {
		double value = s.intercept;
		for (std::size_t i = 0; i < p; ++i) {
			value += s.ar[i] * w[w.size() - 1 - i];
		}
		for (std::size_t j = 0; j < q; ++j) {
			value += s.ma[j] * e[e.size() - 1 - j];
		}
		w.push_back(value);
		e.push_back(0.0);
		out.push_back(value);
	}
	for (std::size_t level = s.order.d; level-- > 0;) {
		const double anchor[1] = {s.level_anchors[level]};
		out = core::undifference(std::span<const double>(out), std::span<const double>(anchor), 1);
	}
	return out;
}

Model fit(std::span<const double> values, const Order& order, const FitOptions& options) {
	order.validate();
	const std::size_t min_length = 10 * (order.p + order.q + 1) + order.d;
	if (values.size() < min_length) {
		throw Error(ErrorCode::TooShort, "ARIMA" + order.to_string() + " needs at least " + std::to_string(min_length) +
		                                     " observations, got " + std::to_string(values.size()));
	}
	for (double v : values) {
		if (!std::isfinite(v)) {
			throw Error(ErrorCode::DegenerateSeries, "series contains non-finite values");
		}
	}

	Model::State state;
	state.order = order;
	std::vector<double> w(values.begin(), values.end());
	for (std::size_t level = 0; level < order.d; ++level) {
		state.level_anchors.push_back(w.back());
		w = core::difference(std::span<const double>(w), 1);
	}
	const std::size_t n = w.size();
	const std::size_t p = order.p;
	const std::size_t q = order.q;
	const bool intercept = options.include_intercept;

	const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
	double spread = 0.0;
	for (double x : w) {
		spread = std::max(spread, std::abs(x - mean));
	}
	const double scale = std::max(1.0, std::abs(mean));

	Parameters params;
	if (spread <= 1e-12 * scale || p + q + (intercept ? 1 : 0) == 0) {
		// Constant after differencing, or nothing to estimate.
		params.intercept = intercept ? mean : 0.0;
		params.ar.assign(p, 0.0);
		params.ma.assign(q, 0.0);
	} else {
		params = initial_estimate(w, order, intercept);
		std::vector<double> e;
		Eigen::MatrixXd jac;
		residuals_and_jacobian(w, params, intercept, e, jac);
		double sse = sum_of_squares(e, p);
		bool converged = false;
		for (std::size_t iter = 0; iter < options.max_iterations && !converged; ++iter) {
			const auto rows = static_cast<Eigen::Index>(n - p);
			const Eigen::MatrixXd j = jac.bottomRows(rows);
			const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(e.data() + p, rows);
			const Eigen::VectorXd step = j.colPivHouseholderQr().solve(-r);
			const Eigen::VectorXd beta = pack(params, intercept);
			double factor = 1.0;
			bool improved = false;
			for (int halving = 0; halving < 40; ++halving, factor *= 0.5) {
				auto candidate = project(unpack(beta + factor * step, p, q, intercept));
				const auto trial = css_residuals(w, candidate.intercept, candidate.ar, candidate.ma);
				const double trial_sse = sum_of_squares(trial, p);
				if (std::isfinite(trial_sse) && trial_sse < sse) {
					const double gain = (sse - trial_sse) / std::max(sse, std::numeric_limits<double>::min());
					params = std::move(candidate);
					sse = trial_sse;
					improved = true;
					converged = gain < options.tolerance || factor * step.norm() < options.tolerance;
					break;
				}
			}
			if (!improved) {
				converged = true;
				break;
			}
			residuals_and_jacobian(w, params, intercept, e, jac);
		}
		if (!converged) {
			throw Error(ErrorCode::NonConvergence,
			            "ARIMA" + order.to_string() + " did not converge in " + std::to_string(options.max_iterations) +
			                " iterations");
		}
	}

	const auto e = css_residuals(w, params.intercept, params.ar, params.ma);
	state.intercept = params.intercept;
	state.ar = params.ar;
	state.ma = params.ma;
	state.nobs = n - p;
	state.css = sum_of_squares(e, p);
	state.sigma2 = std::max(state.css / static_cast<double>(state.nobs), std::numeric_limits<double>::min());
	state.w_tail.assign(w.end() - static_cast<long>(p), w.end());
	state.residual_tail.assign(e.end() - static_cast<long>(q), e.end());
	return Model(std::move(state));
}

Model fit(const core::Series& series, const Order& order, const FitOptions& options) {
	const auto values = series.dense();
	return fit(std::span<const double>(values), order, options);
}

std::vector<double> forecast(const Model& model, std::size_t horizon) {
	return model.forecast(horizon);
}

double evaluate(const core::Series& series, const Order& order, const core::SplitSpec& split,
                const FitOptions& options) {
	const auto partition = core::holdout_split(core::FeatureFrame(series), split);
	const auto model = fit(partition.train.base(), order, options);
	const auto actual = partition.test.base().dense();
	const auto predicted = model.forecast(actual.size());
	return core::mse(actual, predicted);
}

} // namespace agri::arima
