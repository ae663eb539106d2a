#pragma once

#include "agri/core/series.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace agri::arima {

struct Order {
	std::size_t p = 1;
	std::size_t d = 1;
	std::size_t q = 1;

	static constexpr std::size_t kMaxP = 5;
	static constexpr std::size_t kMaxD = 2;
	static constexpr std::size_t kMaxQ = 5;

	bool valid() const noexcept;
	/// Throws ErrorCode::InvalidArgument.
	void validate() const;
	std::string to_string() const;

	auto operator<=>(const Order&) const = default;
};

struct FitOptions {
	bool include_intercept = true;
	std::size_t max_iterations = 500;
	double tolerance = 1e-10;
};

/// Fitted ARIMA(p,d,q) on the d-times differenced series w:
///
///     w[t] = c + sum_i ar[i] * w[t-1-i] + e[t] + sum_j ma[j] * e[t-1-j]
///
/// Immutable; carries the tails needed to forecast past the training end.
class Model {
public:
	struct State {
		Order order;
		double intercept = 0.0;
		std::vector<double> ar;
		std::vector<double> ma;
		double sigma2 = 0.0;
		double css = 0.0;
		std::size_t nobs = 0;
		/// Last value of each differencing level 0..d-1 of the training series.
		std::vector<double> level_anchors;
		/// Last p values of w.
		std::vector<double> w_tail;
		/// Last q in-sample innovations.
		std::vector<double> residual_tail;
	};

	explicit Model(State state);

	const Order& order() const noexcept {
		return state_.order;
	}
	double intercept() const noexcept {
		return state_.intercept;
	}
	const std::vector<double>& ar_coeffs() const noexcept {
		return state_.ar;
	}
	const std::vector<double>& ma_coeffs() const noexcept {
		return state_.ma;
	}
	double sigma2() const noexcept {
		return state_.sigma2;
	}
	double css() const noexcept {
		return state_.css;
	}
	std::size_t nobs() const noexcept {
		return state_.nobs;
	}
	/// nobs * ln(css / nobs) + 2 * (parameters + 1).
	double aic() const;
	const State& state() const noexcept {
		return state_;
	}

	/// Multi-step forecast at price level; future innovations are zero.
	std::vector<double> forecast(std::size_t horizon) const;

private:
	State state_;
};

/// Conditional innovations: e[t] = 0 for t < p.
std::vector<double> css_residuals(std::span<const double> w, double intercept, std::span<const double> ar,
                                  std::span<const double> ma);

/// True when all roots of 1 - ar_1 z - ... - ar_p z^p lie outside the unit circle.
bool is_stationary(std::span<const double> ar);
/// True when all roots of 1 + ma_1 z + ... + ma_q z^q lie outside the unit circle.
bool is_invertible(std::span<const double> ma);
/// Reflects roots inside the unit circle to their reciprocals.
std::vector<double> reflect_ar(std::span<const double> ar);
std::vector<double> reflect_ma(std::span<const double> ma);

/// CSS estimation: Hannan-Rissanen start, then Gauss-Newton with step halving,
/// iterates projected back to the stationary/invertible region.
/// Throws ErrorCode::TooShort (length < 10 (p+q+1) + d), ErrorCode::MissingValue,
/// ErrorCode::DegenerateSeries (non-finite values) or ErrorCode::NonConvergence.
Model fit(std::span<const double> values, const Order& order, const FitOptions& options = {});
Model fit(const core::Series& series, const Order& order, const FitOptions& options = {});

std::vector<double> forecast(const Model& model, std::size_t horizon);

/// Holdout evaluation: fit on the train prefix, forecast the test length.
double evaluate(const core::Series& series, const Order& order, const core::SplitSpec& split,
                const FitOptions& options = {});

} // namespace agri::arima
