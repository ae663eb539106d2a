#include "agri/stationarity/stationarity.hpp"

#include "agri/core/matrix.hpp"
#include "agri/error.hpp"
#include "agri/models/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace agri::stationarity {

namespace {

// tau_c response surfaces: beta_inf + b1/T + b2/T^2 + b3/T^3.
constexpr double kTauC[3][4] = {
    {-3.43035, -6.5393, -16.786, -79.433},
    {-2.86154, -2.8903, -4.234, -40.040},
    {-2.56677, -1.5384, -2.809, 0.0},
};

double surface(const double (&b)[4], double t) {
	return b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
}

struct DfRegression {
	core::Matrix design;
	std::vector<double> response;
};

/// Rows t = start..n-1 of dy[t] on [1, y[t-1], dy[t-1..t-lags]], with dy
/// indexed so that dy[t] = y[t] - y[t-1].
DfRegression df_regression(std::span<const double> y, std::size_t lags, std::size_t start) {
	DfRegression reg;
	reg.design = core::Matrix(y.size() - start, 2 + lags);
	reg.response.resize(y.size() - start);
	for (std::size_t t = start; t < y.size(); ++t) {
		const std::size_t r = t - start;
		reg.design(r, 0) = 1.0;
		reg.design(r, 1) = y[t - 1];
		for (std::size_t i = 1; i <= lags; ++i) {
			reg.design(r, 1 + i) = y[t - i] - y[t - i - 1];
		}
		reg.response[r] = y[t] - y[t - 1];
	}
	return reg;
}

std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
	const double n = static_cast<double>(x.size());
	const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
	std::vector<double> gamma(max_lag + 1, 0.0);
	for (std::size_t k = 0; k <= max_lag; ++k) {
		double s = 0.0;
		for (std::size_t t = 0; t + k < x.size(); ++t) {
			s += (x[t] - mean) * (x[t + k] - mean);
		}
		gamma[k] = s / n;
	}
	return gamma;
}

std::size_t first_inside(const std::vector<CorrelogramPoint>& points) {
	for (std::size_t k = 1; k < points.size(); ++k) {
		if (std::abs(points[k].correlation) < points[k].confidence_band) {
			return k;
		}
	}
	return points.size();
}

bool is_constant(std::span<const double> x) {
	const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
	return *hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi));
}

} // namespace

CriticalValues adf_critical_values(std::size_t nobs) {
	const double t = static_cast<double>(nobs);
	return {surface(kTauC[0], t), surface(kTauC[1], t), surface(kTauC[2], t)};
}

std::size_t default_adf_max_lag(std::size_t n) {
	return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

AdfResult adf_test(std::span<const double> values, std::size_t max_lag) {
	if (values.size() < 20 + max_lag) {
		throw Error(ErrorCode::TooShort, "ADF with max_lag " + std::to_string(max_lag) + " needs at least " +
		                                     std::to_string(20 + max_lag) + " observations");
	}
	for (double v : values) {
		if (!std::isfinite(v)) {
			throw Error(ErrorCode::DegenerateSeries, "series contains non-finite values");
		}
	}
	// Lag selection on the common sample starting at max_lag + 1.
	std::size_t best_lag = 0;
	double best_aic = std::numeric_limits<double>::infinity();
	for (std::size_t k = 0; k <= max_lag; ++k) {
		const auto reg = df_regression(values, k, max_lag + 1);
		const auto fit = core::ols(reg.design, reg.response);
		const double n = static_cast<double>(fit.nobs);
		const double aic = n * std::log(fit.sse / n) + 2.0 * static_cast<double>(k + 2);
		if (aic < best_aic - 1e-12) {
			best_aic = aic;
			best_lag = k;
		}
	}
	const auto reg = df_regression(values, best_lag, best_lag + 1);
	const auto fit = core::ols(reg.design, reg.response);
	AdfResult result;
	result.lag_order = best_lag;
	result.nobs = fit.nobs;
	result.statistic = fit.coefficients[1] / fit.standard_errors[1];
	if (!std::isfinite(result.statistic)) {
		throw Error(ErrorCode::SingularRegression, "Dickey-Fuller statistic is not finite");
	}
	result.critical_values = adf_critical_values(fit.nobs);
	result.stationary_at_5pct = result.statistic < result.critical_values.five_pct;
	return result;
}

AdfResult adf_test(const core::Series& series, std::size_t max_lag) {
	const auto values = series.dense();
	return adf_test(std::span<const double>(values), max_lag);
}

std::vector<CorrelogramPoint> acf(std::span<const double> values, std::size_t max_lag) {
	if (values.size() <= max_lag) {
		throw Error(ErrorCode::TooShort, "series length must exceed max_lag");
	}
	const auto gamma = autocovariance(values, max_lag);
	if (!(gamma[0] > 0.0)) {
		throw Error(ErrorCode::ConstantSeries, "series has zero variance");
	}
	const double band = 1.96 / std::sqrt(static_cast<double>(values.size()));
	std::vector<CorrelogramPoint> out;
	out.reserve(max_lag + 1);
	out.push_back({0, 1.0, band});
	for (std::size_t k = 1; k <= max_lag; ++k) {
		out.push_back({k, gamma[k] / gamma[0], band});
	}
	return out;
}

std::vector<CorrelogramPoint> acf(const core::Series& series, std::size_t max_lag) {
	const auto values = series.dense();
	return acf(std::span<const double>(values), max_lag);
}

std::vector<double> durbin_levinson(std::span<const double> rho) {
	const std::size_t max_lag = rho.size() - 1;
	std::vector<double> partial(max_lag + 1, 0.0);
	partial[0] = 1.0;
	std::vector<double> phi;
	for (std::size_t k = 1; k <= max_lag; ++k) {
		double num = rho[k];
		double den = 1.0;
		for (std::size_t j = 1; j < k; ++j) {
			num -= phi[j - 1] * rho[k - j];
			den -= phi[j - 1] * rho[j];
		}
		if (std::abs(den) < 1e-12) {
			throw Error(ErrorCode::NumericalBreakdown, "Durbin-Levinson denominator vanished at lag " + std::to_string(k));
		}
		const double phi_kk = num / den;
		std::vector<double> next(k);
		for (std::size_t j = 1; j < k; ++j) {
			next[j - 1] = phi[j - 1] - phi_kk * phi[k - j - 1];
		}
		next[k - 1] = phi_kk;
		phi = std::move(next);
		partial[k] = phi_kk;
	}
	return partial;
}

std::vector<CorrelogramPoint> pacf(std::span<const double> values, std::size_t max_lag) {
	const auto correlations = acf(values, max_lag);
	std::vector<double> rho(correlations.size());
	std::transform(correlations.begin(), correlations.end(), rho.begin(),
	               [](const CorrelogramPoint& p) { return p.correlation; });
	const auto partial = durbin_levinson(rho);
	std::vector<CorrelogramPoint> out;
	out.reserve(partial.size());
	for (std::size_t k = 0; k < partial.size(); ++k) {
		out.push_back({k, partial[k], correlations[k].confidence_band});
	}
	return out;
}

std::vector<CorrelogramPoint> pacf(const core::Series& series, std::size_t max_lag) {
	const auto values = series.dense();
	return pacf(std::span<const double>(values), max_lag);
}

OrderSuggestion suggest_order(std::span<const double> values) {
	if (values.size() < 50) {
		throw Error(ErrorCode::TooShort, "order suggestion needs at least 50 observations");
	}
	OrderSuggestion out;
	std::vector<double> w(values.begin(), values.end());
	bool found = false;
	bool constant = false;
	for (std::size_t d = 0; d <= arima::Order::kMaxD; ++d) {
		if (d > 0) {
			w = core::difference(std::span<const double>(w), 1);
		}
		if (is_constant(w)) {
			out.d = d;
			found = constant = true;
			break;
		}
		const auto max_lag = std::min(default_adf_max_lag(w.size()), w.size() - 20);
		if (adf_test(w, max_lag).stationary_at_5pct) {
			out.d = d;
			found = true;
			break;
		}
	}
	if (!found) {
		throw Error(ErrorCode::NoStationaryTransform, "series is not stationary after two differences");
	}
	if (constant) {
		out.p_candidates = {0};
		return out;
	}

	const std::size_t max_lag = std::min<std::size_t>(24, w.size() / 2);
	const auto correlations = acf(w, max_lag);
	const auto partials = pacf(w, max_lag);

	const std::size_t q_cut = first_inside(correlations);
	out.q = std::min(q_cut - 1, kMaxSuggestedOrder);

	const std::size_t p_cut = first_inside(partials);
	const std::size_t p = std::min(p_cut - 1, kMaxSuggestedOrder);
	out.p_candidates = {p};
	const bool reenters = p_cut + 1 < partials.size() &&
	                      std::abs(partials[p_cut + 1].correlation) >= partials[p_cut + 1].confidence_band;
	if (reenters && p + 1 <= kMaxSuggestedOrder) {
		out.p_candidates.push_back(p + 1);
	}

	out.p = out.p_candidates.front();
	if (out.p_candidates.size() > 1) {
		double best_aic = std::numeric_limits<double>::infinity();
		for (const auto candidate : out.p_candidates) {
			const arima::Order order{candidate, out.d, out.q};
			double aic = std::numeric_limits<double>::infinity();
			if (order.valid()) {
				try {
					aic = arima::fit(values, order).aic();
				} catch (const Error&) {
					continue;
				}
			} else {
				// Mean-only model on the differenced series.
				const double n = static_cast<double>(w.size());
				const double mean = std::accumulate(w.begin(), w.end(), 0.0) / n;
				double css = 0.0;
				for (double x : w) {
					css += (x - mean) * (x - mean);
				}
				aic = n * std::log(css / n) + 2.0 * 2.0;
			}
			if (aic < best_aic - 1e-12) {
				best_aic = aic;
				out.p = candidate;
			}
		}
	}
	return out;
}

OrderSuggestion suggest_order(const core::Series& series) {
	const auto values = series.dense();
	return suggest_order(std::span<const double>(values));
}

} // namespace agri::stationarity
