#include "agri/models/gbt.hpp"

#include "agri/core/random.hpp"
#include "agri/error.hpp"
#include "agri/models/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace agri::gbt {

void Params::validate() const {
	if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
		throw Error(ErrorCode::InvalidArgument, "learning_rate must lie in (0, 1]");
	}
	if (max_depth < 1) {
		throw Error(ErrorCode::InvalidArgument, "max_depth must be at least 1");
	}
	if (!(subsample > 0.0 && subsample <= 1.0) || !(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) {
		throw Error(ErrorCode::InvalidArgument, "subsample and colsample_bytree must lie in (0, 1]");
	}
	if (!(reg_lambda >= 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "reg_lambda must be non-negative");
	}
	if (window < 1) {
		throw Error(ErrorCode::InvalidArgument, "window must be at least 1");
	}
}

double Tree::predict(std::span<const double> row) const {
	if (nodes.empty()) {
		return 0.0;
	}
	std::size_t i = 0;
	while (nodes[i].feature >= 0) {
		const auto& node = nodes[i];
		i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right);
	}
	return nodes[i].weight;
}

std::size_t Tree::depth() const {
	if (nodes.empty()) {
		return 0;
	}
	std::function<std::size_t(std::size_t)> visit = [&](std::size_t i) -> std::size_t {
		const auto& node = nodes[i];
		if (node.feature < 0) {
			return 0;
		}
		return 1 + std::max(visit(static_cast<std::size_t>(node.left)), visit(static_cast<std::size_t>(node.right)));
	};
	return visit(0);
}

double split_gain(double grad_left, double hess_left, double grad_total, double hess_total, double lambda) {
	const double grad_right = grad_total - grad_left;
	const double hess_right = hess_total - hess_left;
	return 0.5 * (grad_left * grad_left / (hess_left + lambda) + grad_right * grad_right / (hess_right + lambda) -
	              grad_total * grad_total / (hess_total + lambda));
}

Model::Model(std::vector<Tree> trees, double base_score, Params params, std::size_t best_iteration,
             std::size_t feature_count)
    : trees_(std::move(trees)), base_score_(base_score), params_(std::move(params)),
      best_iteration_(std::min(best_iteration, trees_.size())), feature_count_(feature_count) {}

double Model::predict(std::span<const double> row) const {
	if (row.size() != feature_count_) {
		throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(feature_count_) + " features, got " +
		                                              std::to_string(row.size()));
	}
	double out = base_score_;
	for (std::size_t t = 0; t < best_iteration_; ++t) {
		out += trees_[t].predict(row);
	}
	return out;
}

namespace {

struct Candidate {
	double gain = 0.0;
	int feature = -1;
	double threshold = 0.0;
	double grad_left = 0.0;
	double hess_left = 0.0;
};

/// Rewrites a tree whose children were appended level by level into preorder.
Tree to_preorder(const std::vector<Node>& nodes) {
	Tree out;
	std::function<int(std::size_t)> copy = [&](std::size_t i) -> int {
		const int index = static_cast<int>(out.nodes.size());
		out.nodes.push_back(nodes[i]);
		if (nodes[i].feature >= 0) {
			const int left = copy(static_cast<std::size_t>(nodes[i].left));
			const int right = copy(static_cast<std::size_t>(nodes[i].right));
			out.nodes[static_cast<std::size_t>(index)].left = left;
			out.nodes[static_cast<std::size_t>(index)].right = right;
		}
		return index;
	};
	copy(0);
	return out;
}

class TreeBuilder {
public:
	TreeBuilder(const core::Matrix& x, const std::vector<std::vector<std::size_t>>& sorted, const Params& params)
	    : x_(x), sorted_(sorted), params_(params) {}

	Tree build(std::span<const double> grad, std::span<const double> hess, const std::vector<bool>& sampled,
	           const std::vector<std::size_t>& features) {
		const std::size_t n = x_.rows();
		std::vector<Node> nodes(1);
		std::vector<int> node_of_row(n, -1);
		for (std::size_t i = 0; i < n; ++i) {
			if (sampled[i]) {
				node_of_row[i] = 0;
				nodes[0].grad_sum += grad[i];
				nodes[0].hess_sum += hess[i];
			}
		}
		std::vector<std::size_t> frontier{0};
		for (std::size_t depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
			std::vector<int> slot(nodes.size(), -1);
			for (std::size_t s = 0; s < frontier.size(); ++s) {
				slot[frontier[s]] = static_cast<int>(s);
			}
			std::vector<Candidate> best(frontier.size());
			std::vector<double> grad_left(frontier.size());
			std::vector<double> hess_left(frontier.size());
			std::vector<double> last(frontier.size());
			std::vector<bool> seen(frontier.size());
			for (const auto f : features) {
				std::fill(grad_left.begin(), grad_left.end(), 0.0);
				std::fill(hess_left.begin(), hess_left.end(), 0.0);
				std::fill(seen.begin(), seen.end(), false);
				for (const auto r : sorted_[f]) {
					const int node = node_of_row[r];
					if (node < 0 || slot[static_cast<std::size_t>(node)] < 0) {
						continue;
					}
					const auto s = static_cast<std::size_t>(slot[static_cast<std::size_t>(node)]);
					const double value = x_(r, f);
					if (seen[s] && value > last[s]) {
						const auto& stats = nodes[frontier[s]];
						const double hess_right = stats.hess_sum - hess_left[s];
						if (hess_left[s] >= params_.min_child_weight && hess_right >= params_.min_child_weight) {
							const double gain =
							    split_gain(grad_left[s], hess_left[s], stats.grad_sum, stats.hess_sum, params_.reg_lambda);
							if (gain > best[s].gain) {
								best[s] = {gain, static_cast<int>(f), 0.5 * (last[s] + value), grad_left[s], hess_left[s]};
							}
						}
					}
					grad_left[s] += grad[r];
					hess_left[s] += hess[r];
					last[s] = value;
					seen[s] = true;
				}
			}

			std::vector<std::size_t> next;
			for (std::size_t s = 0; s < frontier.size(); ++s) {
				if (best[s].feature < 0) {
					continue;
				}
				const std::size_t id = frontier[s];
				const auto left = static_cast<int>(nodes.size());
				Node l;
				l.grad_sum = best[s].grad_left;
				l.hess_sum = best[s].hess_left;
				Node r;
				r.grad_sum = nodes[id].grad_sum - best[s].grad_left;
				r.hess_sum = nodes[id].hess_sum - best[s].hess_left;
				nodes.push_back(l);
				nodes.push_back(r);
				auto& parent = nodes[id];
				parent.feature = best[s].feature;
				parent.threshold = best[s].threshold;
				parent.gain = best[s].gain;
				parent.left_grad_sum = best[s].grad_left;
				parent.left_hess_sum = best[s].hess_left;
				parent.left = left;
				parent.right = left + 1;
				next.push_back(static_cast<std::size_t>(left));
				next.push_back(static_cast<std::size_t>(left + 1));
			}
			for (std::size_t i = 0; i < n; ++i) {
				const int node = node_of_row[i];
				if (node < 0) {
					continue;
				}
				const auto& parent = nodes[static_cast<std::size_t>(node)];
				if (parent.feature >= 0 && slot[static_cast<std::size_t>(node)] >= 0) {
					node_of_row[i] = x_(i, static_cast<std::size_t>(parent.feature)) < parent.threshold ? parent.left
					                                                                                    : parent.right;
				}
			}
			frontier = std::move(next);
		}
		for (auto& node : nodes) {
			if (node.feature < 0) {
				node.weight = -params_.learning_rate * node.grad_sum / (node.hess_sum + params_.reg_lambda);
			}
		}
		return to_preorder(nodes);
	}

private:
	const core::Matrix& x_;
	const std::vector<std::vector<std::size_t>>& sorted_;
	const Params& params_;
};

double mean_squared(std::span<const double> predicted, std::span<const double> actual) {
	double s = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		s += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
	}
	return s / static_cast<double>(actual.size());
}

} // namespace

Model fit(const core::Matrix& features, std::span<const double> targets, const Params& params,
          std::optional<Validation> validation, FitTrace* trace) {
	params.validate();
	const std::size_t n = features.rows();
	const std::size_t width = features.cols();
	if (n < 10 || width == 0) {
		throw Error(ErrorCode::EmptyData, "boosting needs at least 10 rows and one feature");
	}
	if (targets.size() != n) {
		throw Error(ErrorCode::DimensionMismatch, "feature rows and targets differ in count");
	}
	if (validation && (validation->features.cols() != width ||
	                   validation->features.rows() != validation->targets.size() || validation->targets.empty())) {
		throw Error(ErrorCode::DimensionMismatch, "validation set does not match the training features");
	}

	std::vector<std::vector<std::size_t>> sorted(width);
	bool all_constant = true;
	for (std::size_t f = 0; f < width; ++f) {
		auto& order = sorted[f];
		order.resize(n);
		std::iota(order.begin(), order.end(), 0);
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return features(a, f) < features(b, f); });
		if (features(order.front(), f) < features(order.back(), f)) {
			all_constant = false;
		}
	}

	const double base = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
	std::vector<double> pred(n, base);
	std::vector<double> valid_pred(validation ? validation->targets.size() : 0, base);
	std::vector<double> grad(n);
	const std::vector<double> hess(n, 1.0);
	TreeBuilder builder(features, sorted, params);

	const std::size_t column_count =
	    std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.colsample_bytree * static_cast<double>(width))));

	std::vector<Tree> trees;
	double best_valid = std::numeric_limits<double>::infinity();
	std::size_t best_round = 0;
	for (std::size_t round = 0; round < params.n_estimators; ++round) {
		for (std::size_t i = 0; i < n; ++i) {
			grad[i] = pred[i] - targets[i];
		}
		std::vector<bool> sampled(n, true);
		if (params.subsample < 1.0) {
			const core::CounterRng rows(params.seed, 2 * round);
			std::size_t kept = 0;
			for (std::size_t i = 0; i < n; ++i) {
				sampled[i] = static_cast<double>(rows.draw(i) >> 11) * 0x1.0p-53 < params.subsample;
				kept += sampled[i] ? 1 : 0;
			}
			if (kept == 0) {
				sampled.assign(n, true);
			}
		}
		std::vector<std::size_t> columns(width);
		std::iota(columns.begin(), columns.end(), 0);
		if (column_count < width) {
			core::CounterRng cols(params.seed, 2 * round + 1);
			for (std::size_t i = 0; i < column_count; ++i) {
				std::swap(columns[i], columns[i + cols.below(width - i)]);
			}
			columns.resize(column_count);
			std::sort(columns.begin(), columns.end());
		}

		trees.push_back(builder.build(grad, hess, sampled, columns));
		const auto& tree = trees.back();
		for (std::size_t i = 0; i < n; ++i) {
			pred[i] += tree.predict(features.row(i));
		}
		if (trace) {
			trace->train_mse.push_back(mean_squared(pred, targets));
		}
		if (validation) {
			for (std::size_t i = 0; i < valid_pred.size(); ++i) {
				valid_pred[i] += tree.predict(validation->features.row(i));
			}
			const double score = mean_squared(valid_pred, validation->targets);
			if (trace) {
				trace->validation_mse.push_back(score);
			}
			if (score < best_valid) {
				best_valid = score;
				best_round = round;
			} else if (round - best_round >= params.early_stopping_rounds) {
				break;
			}
		}
	}
	const std::size_t best_iteration = validation ? best_round + 1 : trees.size();
	Model model(std::move(trees), base, params, best_iteration, width);
	if (all_constant) {
		model.add_warning("all features are constant; model reduces to the base score");
	}
	return model;
}

double predict(const Model& model, std::span<const double> row) {
	return model.predict(row);
}

FrameModel fit_frame(const core::FeatureFrame& train, const Params& params, bool multivariate) {
	const auto data = models::make_supervised(train, params.window, multivariate);
	const std::size_t rows = data.targets.size();
	const std::size_t holdout = rows >= 20 ? std::max<std::size_t>(1, rows / 10) : 0;
	if (holdout == 0) {
		return {fit(data.features, data.targets, params), multivariate};
	}
	const std::size_t fit_rows = rows - holdout;
	core::Matrix fit_x(fit_rows, data.features.cols());
	core::Matrix valid_x(holdout, data.features.cols());
	for (std::size_t i = 0; i < rows; ++i) {
		auto dst = i < fit_rows ? fit_x.row(i) : valid_x.row(i - fit_rows);
		std::copy(data.features.row(i).begin(), data.features.row(i).end(), dst.begin());
	}
	const std::span<const double> targets(data.targets);
	const Validation validation{valid_x, targets.subspan(fit_rows)};
	return {fit(fit_x, targets.first(fit_rows), params, validation), multivariate};
}

std::vector<double> forecast(const FrameModel& model, const core::FeatureFrame& history, std::size_t horizon) {
	const auto used = model.multivariate ? history : history.price_only();
	return models::recursive_forecast(used, model.model.params().window, model.multivariate, horizon,
	                                  [&](std::span<const double> row) { return model.model.predict(row); });
}

} // namespace agri::gbt
