#pragma once

#include "agri/core/matrix.hpp"
#include "agri/core/series.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agri::gbt {

struct Params {
	double learning_rate = 0.1;
	std::size_t max_depth = 8;
	std::size_t n_estimators = 1000;
	double subsample = 0.8;
	double colsample_bytree = 0.8;
	double reg_lambda = 1.0;
	std::size_t early_stopping_rounds = 50;
	std::uint64_t seed = 27;
	double min_child_weight = 1.0;
	/// Accepted for configuration parity; has no effect on regression.
	double scale_pos_weight = 1.0;
	/// Lag window for frame-level models.
	std::size_t window = 8;

	void validate() const;
};

struct Node {
	/// -1 marks a leaf.
	int feature = -1;
	double threshold = 0.0;
	int left = -1;
	int right = -1;
	/// Leaf output, already multiplied by the learning rate.
	double weight = 0.0;
	double gain = 0.0;
	double grad_sum = 0.0;
	double hess_sum = 0.0;
	/// Split statistics of the left child, kept for gain audits.
	double left_grad_sum = 0.0;
	double left_hess_sum = 0.0;
};

/// Binary tree in preorder; rows with x[feature] < threshold go left.
struct Tree {
	std::vector<Node> nodes;

	double predict(std::span<const double> row) const;
	std::size_t depth() const;
};

/// 0.5 * [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)].
double split_gain(double grad_left, double hess_left, double grad_total, double hess_total, double lambda);

struct Validation {
	const core::Matrix& features;
	std::span<const double> targets;
};

class Model {
public:
	Model() = default;
	Model(std::vector<Tree> trees, double base_score, Params params, std::size_t best_iteration,
	      std::size_t feature_count);

	/// base_score + sum of the first best_iteration() trees.
	double predict(std::span<const double> row) const;

	const std::vector<Tree>& trees() const noexcept {
		return trees_;
	}
	double base_score() const noexcept {
		return base_score_;
	}
	const Params& params() const noexcept {
		return params_;
	}
	std::size_t best_iteration() const noexcept {
		return best_iteration_;
	}
	std::size_t feature_count() const noexcept {
		return feature_count_;
	}
	const std::vector<std::string>& warnings() const noexcept {
		return warnings_;
	}
	void add_warning(std::string warning) {
		warnings_.push_back(std::move(warning));
	}

private:
	std::vector<Tree> trees_;
	double base_score_ = 0.0;
	Params params_;
	std::size_t best_iteration_ = 0;
	std::size_t feature_count_ = 0;
	std::vector<std::string> warnings_;
};

/// Per-round metrics recorded during fit.
struct FitTrace {
	std::vector<double> train_mse;
	std::vector<double> validation_mse;
};

/// Second-order boosting with exact greedy splits. Row subsampling and
/// per-tree column sampling draw from core::CounterRng(params.seed, stream)
/// with stream 2r for rows and 2r+1 for columns of round r.
/// Throws ErrorCode::EmptyData (fewer than 10 rows) or ErrorCode::DimensionMismatch.
Model fit(const core::Matrix& features, std::span<const double> targets, const Params& params,
          std::optional<Validation> validation = std::nullopt, FitTrace* trace = nullptr);
double predict(const Model& model, std::span<const double> row);

struct FrameModel {
	Model model;
	bool multivariate = false;
};

/// Lagged-window fit on `train`; the last 10% of windows act as the
/// early-stopping validation set.
FrameModel fit_frame(const core::FeatureFrame& train, const Params& params, bool multivariate);
std::vector<double> forecast(const FrameModel& model, const core::FeatureFrame& history, std::size_t horizon);

} // namespace agri::gbt
