#pragma once

#include "agri/core/random.hpp"
#include "agri/core/series.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace agri::lstm {

struct Params {
	std::size_t epochs = 100;
	std::size_t batch_size = 10;
	std::size_t layers = 4;
	std::size_t hidden_size = 50;
	double dropout_rate = 0.2;
	std::size_t output_size = 52;
	std::size_t lookback = 52;
	double learning_rate = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double adam_epsilon = 1e-8;
	double clip_norm = 5.0;
	/// Trailing share of windows held out for early stopping.
	double validation_fraction = 0.1;
	std::size_t patience = 10;
	std::uint64_t seed = 27;

	void validate() const;
};

const std::vector<double>& dropout_grid();

/// RNG streams under Params::seed.
inline constexpr std::uint64_t kInitStream = 0x1000;
inline constexpr std::uint64_t kDropoutStream = 0x2000;
/// Epoch e shuffles with stream kShuffleStream + e.
inline constexpr std::uint64_t kShuffleStream = 0x10000;

/// Supervised windows. inputs[i] is width x lookback (one column per week);
/// targets[i] holds the next output_size prices.
struct Windows {
	std::vector<Eigen::MatrixXd> inputs;
	std::vector<Eigen::VectorXd> targets;

	std::size_t size() const noexcept {
		return inputs.size();
	}
};

/// Expects an already scaled frame. Throws ErrorCode::TooShort or
/// ErrorCode::MissingValue.
Windows make_windows(const core::FeatureFrame& scaled, std::size_t lookback, std::size_t output_size,
                     bool multivariate);

/// Inverted dropout: each entry is zeroed with probability `rate`, survivors
/// are scaled by 1/(1-rate).
Eigen::MatrixXd apply_dropout(const Eigen::MatrixXd& values, double rate, core::CounterRng& rng);

struct NamedArray {
	std::string name;
	std::vector<std::size_t> shape;
	std::vector<double> data;
};

/// Stacked LSTM with a dense head. Gate order i, f, g, o; layer l has
/// W (4H x (in+H)) acting on [x_t; h_{t-1}] and bias b (4H). Every layer but
/// the last feeds its full output sequence upward; the last layer's final
/// state feeds the dense head (output_size x H). All parameters live in one
/// flat buffer: per layer W (row-major) then b, then dense W, dense b.
class Network {
public:
	Network() = default;
	Network(std::size_t input_width, std::size_t hidden, std::size_t layers, std::size_t output_size);

	/// Uniform(+-1/sqrt(fan_in)) weights, zero biases, forget-gate bias 1.
	void initialize(std::uint64_t seed);

	std::size_t input_width() const noexcept {
		return input_width_;
	}
	std::size_t hidden() const noexcept {
		return hidden_;
	}
	std::size_t layers() const noexcept {
		return layers_;
	}
	std::size_t output_size() const noexcept {
		return output_size_;
	}
	std::size_t parameter_count() const noexcept {
		return params_.size();
	}
	std::span<double> parameters() noexcept {
		return params_;
	}
	std::span<const double> parameters() const noexcept {
		return params_;
	}

	/// One window (input_width x T) to an output_size vector. With
	/// `training` set, dropout masks are drawn from `rng`.
	Eigen::VectorXd forward(const Eigen::MatrixXd& input, bool training = false, double dropout_rate = 0.0,
	                        core::CounterRng* rng = nullptr) const;

	/// Mean squared error over the batch and all outputs. When `gradient` is
	/// non-empty it receives dLoss/dparameters (same layout as parameters()).
	/// Dropout is active when dropout_rate > 0 and rng is given.
	double batch_loss(std::span<const Eigen::MatrixXd* const> inputs, std::span<const Eigen::VectorXd* const> targets,
	                  double dropout_rate, core::CounterRng* rng, std::span<double> gradient) const;

	std::vector<NamedArray> named_arrays() const;
	/// Throws ErrorCode::ShapeMismatch.
	static Network from_named_arrays(const std::vector<NamedArray>& arrays);

	bool operator==(const Network&) const = default;

private:
	struct Cache;
	Eigen::MatrixXd run(std::span<const Eigen::MatrixXd* const> inputs, double dropout_rate, core::CounterRng* rng,
	                    Cache* cache) const;

	std::size_t layer_input(std::size_t layer) const {
		return layer == 0 ? input_width_ : hidden_;
	}
	std::size_t weight_offset(std::size_t layer) const;
	std::size_t bias_offset(std::size_t layer) const;
	std::size_t dense_offset() const;

	std::size_t input_width_ = 0;
	std::size_t hidden_ = 0;
	std::size_t layers_ = 0;
	std::size_t output_size_ = 0;
	std::vector<double> params_;
};

struct TrainHistory {
	/// Mean training loss per epoch as seen during the (dropout) pass.
	std::vector<double> train_loss;
	std::vector<double> validation_loss;
	std::size_t best_epoch = 0;
	bool early_stopped = false;
};

/// Adam with bias correction on minibatches (last partial batch kept),
/// global gradient-norm clipping, and early stopping on the trailing
/// validation windows with best-weight restore. Throws ErrorCode::EmptyData
/// or ErrorCode::NonFiniteLoss.
Network train(const Windows& windows, const Params& params, std::size_t input_width, TrainHistory* history = nullptr);

struct Model {
	Network network;
	Params params;
	core::MinMaxScaler scaler;
	bool multivariate = false;
	TrainHistory history;
};

Model fit_frame(const core::FeatureFrame& train, const Params& params, bool multivariate);

/// Direct multi-horizon forecast from the last `lookback` rows of `history`.
/// Scaled outputs are clamped to [0,1] before inverse scaling. Throws
/// ErrorCode::TooShort or ErrorCode::HorizonTooLarge.
std::vector<double> forecast(const Model& model, const core::FeatureFrame& history, std::size_t horizon);

/// Horizons beyond output_size: forecasts are appended to the history in
/// blocks of output_size weeks (exogenous columns held at their last value).
std::vector<double> forecast_extended(const Model& model, const core::FeatureFrame& history, std::size_t horizon);

} // namespace agri::lstm
