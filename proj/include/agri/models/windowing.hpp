#pragma once

#include "agri/core/matrix.hpp"
#include "agri/core/series.hpp"

#include <functional>
#include <span>
#include <vector>

namespace agri::models {

struct Supervised {
	core::Matrix features;
	std::vector<double> targets;
};

/// Lagged-window regression rows for one-step-ahead models. Row t carries
/// price[t-window .. t-1] and, when `multivariate`, every exogenous column
/// at t-1; its target is price[t]. Yields rows() - window rows.
/// Throws ErrorCode::TooShort or ErrorCode::MissingValue.
Supervised make_supervised(const core::FeatureFrame& frame, std::size_t window, bool multivariate);

/// Feature row that follows the last row of `frame`.
std::vector<double> last_feature_row(const core::FeatureFrame& frame, std::size_t window, bool multivariate);

/// Recursive multi-step strategy: each prediction is appended to the price
/// window; exogenous features stay at their last observed value.
std::vector<double> recursive_forecast(const core::FeatureFrame& history, std::size_t window, bool multivariate,
                                       std::size_t horizon,
                                       const std::function<double(std::span<const double>)>& predict_row);

} // namespace agri::models
