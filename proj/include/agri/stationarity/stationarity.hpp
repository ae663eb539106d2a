#pragma once

#include "agri/core/series.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace agri::stationarity {

struct CriticalValues {
	double one_pct;
	double five_pct;
	double ten_pct;
};

/// MacKinnon (2010) response-surface critical values for the constant-only
/// Dickey-Fuller test with one variable, at sample size `nobs`.
CriticalValues adf_critical_values(std::size_t nobs);

struct AdfResult {
	double statistic = 0.0;
	std::size_t lag_order = 0;
	std::size_t nobs = 0;
	CriticalValues critical_values{};
	bool stationary_at_5pct = false;
};

/// Schwert's rule: floor(12 * (n / 100)^(1/4)).
std::size_t default_adf_max_lag(std::size_t n);

/// Augmented Dickey-Fuller test with constant and no trend:
///
///     dy[t] = a + g * y[t-1] + sum_{i=1..k} b_i * dy[t-i] + e[t]
///
/// k is chosen by AIC over 0..max_lag on a common sample, then the chosen
/// regression is refitted on its full sample; the statistic is t(g).
/// Throws ErrorCode::TooShort (length < 20 + max_lag), ErrorCode::MissingValue
/// or ErrorCode::SingularRegression.
AdfResult adf_test(std::span<const double> values, std::size_t max_lag);
AdfResult adf_test(const core::Series& series, std::size_t max_lag);

struct CorrelogramPoint {
	std::size_t lag;
	double correlation;
	double confidence_band;
};

/// Biased sample autocorrelation for lags 0..max_lag; band = 1.96 / sqrt(n).
/// Throws ErrorCode::TooShort or ErrorCode::ConstantSeries.
std::vector<CorrelogramPoint> acf(std::span<const double> values, std::size_t max_lag);
std::vector<CorrelogramPoint> acf(const core::Series& series, std::size_t max_lag);

/// Partial autocorrelation for lags 0..max_lag by Durbin-Levinson on the acf.
/// Throws ErrorCode::NumericalBreakdown when the recursion's denominator
/// vanishes.
std::vector<CorrelogramPoint> pacf(std::span<const double> values, std::size_t max_lag);
std::vector<CorrelogramPoint> pacf(const core::Series& series, std::size_t max_lag);

/// Durbin-Levinson on a given autocorrelation sequence rho[0..K] (rho[0]=1).
std::vector<double> durbin_levinson(std::span<const double> rho);

struct OrderSuggestion {
	std::size_t p = 0;
	std::size_t d = 0;
	std::size_t q = 0;
	std::vector<std::size_t> p_candidates;
};

inline constexpr std::size_t kMaxSuggestedOrder = 5;

/// Reads (p, d, q) the way one reads ADF output and ACF/PACF plots:
///   d: smallest of 0, 1, 2 whose differenced series passes ADF at 5%;
///   q: first ACF lag inside the band, minus one;
///   p: likewise from the PACF, widened to {p, p+1} when the PACF re-enters
///      the significant region right after its first inside lag; AIC of
///      trial CSS fits picks between candidates.
/// Throws ErrorCode::TooShort (< 50 points) or ErrorCode::NoStationaryTransform.
OrderSuggestion suggest_order(std::span<const double> values);
OrderSuggestion suggest_order(const core::Series& series);

} // namespace agri::stationarity
