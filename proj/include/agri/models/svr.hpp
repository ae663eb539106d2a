#pragma once

#include "agri/core/matrix.hpp"
#include "agri/core/series.hpp"
#include "agri/models/windowing.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace agri::svr {

struct Params {
	double c = 1.0;
	double epsilon = 0.1;
	/// Defaults to 1 / feature count when unset.
	std::optional<double> gamma;
	std::size_t window = 8;
	/// Stop when the maximal KKT violation falls below this.
	double tolerance = 1e-3;
	/// Iteration cap is max_passes * 2n working-set updates.
	std::size_t max_passes = 10000;

	double effective_gamma(std::size_t feature_count) const;
	void validate() const;
};

using models::make_supervised;

/// exp(-gamma * |x - y|^2). Throws ErrorCode::DimensionMismatch.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// Solution of the epsilon-SVR dual
///
///     min_{a, a*}  1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - z' (a - a*)
///     s.t.         sum(a - a*) = 0,  0 <= a, a* <= C
struct DualSolution {
	/// a_i - a*_i per training row.
	std::vector<double> coefficients;
	std::vector<double> alpha;
	std::vector<double> alpha_star;
	double bias = 0.0;
	double objective = 0.0;
	double max_violation = 0.0;
	std::size_t iterations = 0;
};

/// SMO with second-order working-set selection. Throws
/// ErrorCode::NonConvergence or ErrorCode::DegenerateInput.
DualSolution solve_dual(const core::Matrix& features, std::span<const double> targets, const Params& params);

/// Dual objective of a candidate (alpha, alpha_star), for cross-checks.
double dual_objective(const core::Matrix& features, std::span<const double> targets, const Params& params,
                      std::span<const double> alpha, std::span<const double> alpha_star);

/// Fitted regressor. When a scaler is attached, predict() takes feature rows
/// in original units and returns MYR; without one it works in model units.
class Model {
public:
	Model() = default;
	Model(core::Matrix support_vectors, std::vector<double> dual_coeffs, double bias, Params params, double gamma);

	double predict(std::span<const double> row) const;
	/// Prediction on an already-scaled row, in scaled target units.
	double predict_scaled(std::span<const double> row) const;

	const core::Matrix& support_vectors() const noexcept {
		return support_vectors_;
	}
	const std::vector<double>& dual_coeffs() const noexcept {
		return dual_coeffs_;
	}
	double bias() const noexcept {
		return bias_;
	}
	double gamma() const noexcept {
		return gamma_;
	}
	const Params& params() const noexcept {
		return params_;
	}
	std::size_t feature_count() const noexcept {
		return feature_count_;
	}

	/// Attach frame scaling: `feature_ranges[i]` scales feature column i,
	/// `target_range` maps predictions back to price units.
	void set_scaling(std::vector<core::MinMaxScaler::Range> feature_ranges, core::MinMaxScaler::Range target_range);
	const std::vector<core::MinMaxScaler::Range>& feature_ranges() const noexcept {
		return feature_ranges_;
	}
	const std::optional<core::MinMaxScaler::Range>& target_range() const noexcept {
		return target_range_;
	}
	void set_feature_count(std::size_t count) noexcept {
		feature_count_ = count;
	}

private:
	core::Matrix support_vectors_;
	std::vector<double> dual_coeffs_;
	double bias_ = 0.0;
	Params params_;
	double gamma_ = 1.0;
	std::size_t feature_count_ = 0;
	std::vector<core::MinMaxScaler::Range> feature_ranges_;
	std::optional<core::MinMaxScaler::Range> target_range_;
};

/// Fits on the given rows as-is (no scaling).
Model fit(const core::Matrix& features, std::span<const double> targets, const Params& params);
double predict(const Model& model, std::span<const double> row);

/// Frame-level model: minmax scaling fitted on `train`, lagged windows,
/// prediction in MYR.
struct FrameModel {
	Model model;
	core::MinMaxScaler scaler;
	bool multivariate = false;
};

FrameModel fit_frame(const core::FeatureFrame& train, const Params& params, bool multivariate);
/// Recursive forecast continuing `history` (raw units).
std::vector<double> forecast(const FrameModel& model, const core::FeatureFrame& history, std::size_t horizon);

} // namespace agri::svr
