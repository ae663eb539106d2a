#include "agri/models/lstm.hpp"

#include "agri/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace agri::lstm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

void Params::validate() const {
	if (layers < 1 || hidden_size < 1 || output_size < 1 || lookback < 1 || batch_size < 1 || epochs < 1) {
		throw Error(ErrorCode::InvalidArgument, "layers, sizes, batch_size and epochs must be at least 1");
	}
	if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
		throw Error(ErrorCode::InvalidArgument, "dropout_rate must lie in [0, 1)");
	}
	if (!(learning_rate > 0.0) || !(clip_norm > 0.0)) {
		throw Error(ErrorCode::InvalidArgument, "learning_rate and clip_norm must be positive");
	}
	if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
		throw Error(ErrorCode::InvalidArgument, "validation_fraction must lie in [0, 1)");
	}
}

const std::vector<double>& dropout_grid() {
	static const std::vector<double> grid{0.1, 0.2, 0.3};
	return grid;
}

Windows make_windows(const core::FeatureFrame& scaled, std::size_t lookback, std::size_t output_size,
                     bool multivariate) {
	const std::size_t rows = scaled.rows();
	if (rows < lookback + output_size) {
		throw Error(ErrorCode::TooShort, "need at least " + std::to_string(lookback + output_size) +
		                                     " rows for windows, got " + std::to_string(rows));
	}
	const std::size_t width = multivariate ? scaled.column_count() : 1;
	std::vector<std::vector<double>> columns;
	for (std::size_t c = 0; c < width; ++c) {
		columns.push_back(scaled.dense(c));
	}
	Windows out;
	const std::size_t count = rows - lookback - output_size + 1;
	for (std::size_t i = 0; i < count; ++i) {
		Eigen::MatrixXd input(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(lookback));
		for (std::size_t t = 0; t < lookback; ++t) {
			for (std::size_t c = 0; c < width; ++c) {
				input(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = columns[c][i + t];
			}
		}
		Eigen::VectorXd target(static_cast<Eigen::Index>(output_size));
		for (std::size_t k = 0; k < output_size; ++k) {
			target[static_cast<Eigen::Index>(k)] = columns[0][i + lookback + k];
		}
		out.inputs.push_back(std::move(input));
		out.targets.push_back(std::move(target));
	}
	return out;
}

namespace {

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, core::CounterRng& rng) {
	Eigen::MatrixXd mask(rows, cols);
	const double scale = 1.0 / (1.0 - rate);
	for (Eigen::Index j = 0; j < cols; ++j) {
		for (Eigen::Index i = 0; i < rows; ++i) {
			mask(i, j) = rng.uniform() >= rate ? scale : 0.0;
		}
	}
	return mask;
}

void sigmoid_inplace(Eigen::Block<Eigen::MatrixXd> block) {
	block = (1.0 + (-block.array()).exp()).inverse().matrix();
}

} // namespace

Eigen::MatrixXd apply_dropout(const Eigen::MatrixXd& values, double rate, core::CounterRng& rng) {
	if (rate <= 0.0) {
		return values;
	}
	return values.cwiseProduct(dropout_mask(values.rows(), values.cols(), rate, rng));
}

struct Network::Cache {
	struct Layer {
		std::vector<Eigen::MatrixXd> xcat;
		std::vector<Eigen::MatrixXd> act;
		std::vector<Eigen::MatrixXd> cell;
		std::vector<Eigen::MatrixXd> tanh_cell;
		std::vector<Eigen::MatrixXd> mask;
	};
	std::vector<Layer> layers;
	Eigen::MatrixXd top;
};

Network::Network(std::size_t input_width, std::size_t hidden, std::size_t layers, std::size_t output_size)
    : input_width_(input_width), hidden_(hidden), layers_(layers), output_size_(output_size) {
	if (input_width == 0 || hidden == 0 || layers == 0 || output_size == 0) {
		throw Error(ErrorCode::ShapeMismatch, "network dimensions must be positive");
	}
	params_.assign(dense_offset() + output_size_ * hidden_ + output_size_, 0.0);
}

std::size_t Network::weight_offset(std::size_t layer) const {
	std::size_t offset = 0;
	for (std::size_t l = 0; l < layer; ++l) {
		offset += 4 * hidden_ * (layer_input(l) + hidden_) + 4 * hidden_;
	}
	return offset;
}

std::size_t Network::bias_offset(std::size_t layer) const {
	return weight_offset(layer) + 4 * hidden_ * (layer_input(layer) + hidden_);
}

std::size_t Network::dense_offset() const {
	return weight_offset(layers_);
}

void Network::initialize(std::uint64_t seed) {
	core::CounterRng rng(seed, kInitStream);
	std::fill(params_.begin(), params_.end(), 0.0);
	for (std::size_t l = 0; l < layers_; ++l) {
		const double bound = 1.0 / std::sqrt(static_cast<double>(layer_input(l) + hidden_));
		const std::size_t begin = weight_offset(l);
		for (std::size_t k = begin; k < bias_offset(l); ++k) {
			params_[k] = rng.uniform(-bound, bound);
		}
		for (std::size_t k = 0; k < hidden_; ++k) {
			params_[bias_offset(l) + hidden_ + k] = 1.0;
		}
	}
	const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
	for (std::size_t k = dense_offset(); k < dense_offset() + output_size_ * hidden_; ++k) {
		params_[k] = rng.uniform(-bound, bound);
	}
}

Eigen::MatrixXd Network::run(std::span<const Eigen::MatrixXd* const> inputs, double dropout_rate,
                             core::CounterRng* rng, Cache* cache) const {
	if (inputs.empty()) {
		throw Error(ErrorCode::ShapeMismatch, "empty batch");
	}
	const auto batch = static_cast<Eigen::Index>(inputs.size());
	const Eigen::Index steps = inputs.front()->cols();
	const auto h = static_cast<Eigen::Index>(hidden_);
	for (const auto* input : inputs) {
		if (input->rows() != static_cast<Eigen::Index>(input_width_) || input->cols() != steps || steps == 0) {
			throw Error(ErrorCode::ShapeMismatch, "input window must be " + std::to_string(input_width_) +
			                                          " features by a common positive length");
		}
	}
	const bool drop = dropout_rate > 0.0 && rng != nullptr;

	std::vector<Eigen::MatrixXd> sequence(static_cast<std::size_t>(steps));
	for (Eigen::Index t = 0; t < steps; ++t) {
		auto& x = sequence[static_cast<std::size_t>(t)];
		x.resize(static_cast<Eigen::Index>(input_width_), batch);
		for (Eigen::Index b = 0; b < batch; ++b) {
			x.col(b) = inputs[static_cast<std::size_t>(b)]->col(t);
		}
	}
	if (cache) {
		cache->layers.assign(layers_, {});
	}
	Eigen::MatrixXd top;
	for (std::size_t l = 0; l < layers_; ++l) {
		const auto in = static_cast<Eigen::Index>(layer_input(l));
		const ConstMatrixMap w(params_.data() + weight_offset(l), 4 * h, in + h);
		const ConstVectorMap bias(params_.data() + bias_offset(l), 4 * h);
		const bool last_layer = l + 1 == layers_;
		Eigen::MatrixXd state = Eigen::MatrixXd::Zero(h, batch);
		Eigen::MatrixXd cell = Eigen::MatrixXd::Zero(h, batch);
		Eigen::MatrixXd xcat(in + h, batch);
		Eigen::MatrixXd act(4 * h, batch);
		std::vector<Eigen::MatrixXd> next(last_layer ? 0 : static_cast<std::size_t>(steps));
		Cache::Layer* lc = cache ? &cache->layers[l] : nullptr;
		if (lc) {
			const auto n = static_cast<std::size_t>(steps);
			lc->xcat.resize(n);
			lc->act.resize(n);
			lc->cell.resize(n);
			lc->tanh_cell.resize(n);
			lc->mask.resize(n);
		}
		for (Eigen::Index t = 0; t < steps; ++t) {
			const auto ti = static_cast<std::size_t>(t);
			xcat.topRows(in) = sequence[ti];
			xcat.bottomRows(h) = state;
			act.noalias() = w * xcat;
			act.colwise() += bias;
			sigmoid_inplace(act.topRows(2 * h));
			act.middleRows(2 * h, h) = act.middleRows(2 * h, h).array().tanh().matrix();
			sigmoid_inplace(act.bottomRows(h));
			cell = act.middleRows(h, h).cwiseProduct(cell) + act.topRows(h).cwiseProduct(act.middleRows(2 * h, h));
			Eigen::MatrixXd tanh_cell = cell.array().tanh().matrix();
			state = act.bottomRows(h).cwiseProduct(tanh_cell);
			Eigen::MatrixXd mask;
			if (drop && (!last_layer || t + 1 == steps)) {
				mask = dropout_mask(h, batch, dropout_rate, *rng);
			}
			if (!last_layer) {
				next[ti] = mask.size() ? state.cwiseProduct(mask) : state;
			} else if (t + 1 == steps) {
				top = mask.size() ? state.cwiseProduct(mask) : state;
			}
			if (lc) {
				lc->xcat[ti] = xcat;
				lc->act[ti] = act;
				lc->cell[ti] = cell;
				lc->tanh_cell[ti] = std::move(tanh_cell);
				lc->mask[ti] = std::move(mask);
			}
		}
		if (!last_layer) {
			sequence = std::move(next);
		}
	}
	const auto out = static_cast<Eigen::Index>(output_size_);
	const ConstMatrixMap dense(params_.data() + dense_offset(), out, h);
	const ConstVectorMap dense_bias(params_.data() + dense_offset() + output_size_ * hidden_, out);
	Eigen::MatrixXd y = dense * top;
	y.colwise() += dense_bias;
	if (cache) {
		cache->top = std::move(top);
	}
	return y;
}

Eigen::VectorXd Network::forward(const Eigen::MatrixXd& input, bool training, double dropout_rate,
                                 core::CounterRng* rng) const {
	const Eigen::MatrixXd* batch[] = {&input};
	return run(batch, training ? dropout_rate : 0.0, training ? rng : nullptr, nullptr).col(0);
}

double Network::batch_loss(std::span<const Eigen::MatrixXd* const> inputs,
                           std::span<const Eigen::VectorXd* const> targets, double dropout_rate,
                           core::CounterRng* rng, std::span<double> gradient) const {
	if (targets.size() != inputs.size()) {
		throw Error(ErrorCode::ShapeMismatch, "inputs and targets differ in count");
	}
	const bool want_gradient = !gradient.empty();
	if (want_gradient && gradient.size() != params_.size()) {
		throw Error(ErrorCode::ShapeMismatch, "gradient buffer does not match the parameter count");
	}
	Cache cache;
	const Eigen::MatrixXd y = run(inputs, dropout_rate, rng, want_gradient ? &cache : nullptr);
	const auto batch = static_cast<Eigen::Index>(inputs.size());
	const auto out = static_cast<Eigen::Index>(output_size_);
	Eigen::MatrixXd diff(out, batch);
	for (Eigen::Index b = 0; b < batch; ++b) {
		const auto* target = targets[static_cast<std::size_t>(b)];
		if (target->size() != out) {
			throw Error(ErrorCode::ShapeMismatch, "target length must equal output_size");
		}
		diff.col(b) = y.col(b) - *target;
	}
	const double denom = static_cast<double>(batch * out);
	const double loss = diff.squaredNorm() / denom;
	if (!want_gradient) {
		return loss;
	}

	std::fill(gradient.begin(), gradient.end(), 0.0);
	const auto h = static_cast<Eigen::Index>(hidden_);
	const Eigen::MatrixXd d_y = diff * (2.0 / denom);
	MatrixMap g_dense(gradient.data() + dense_offset(), out, h);
	VectorMap g_dense_bias(gradient.data() + dense_offset() + output_size_ * hidden_, out);
	g_dense.noalias() += d_y * cache.top.transpose();
	g_dense_bias += d_y.rowwise().sum();
	const ConstMatrixMap dense(params_.data() + dense_offset(), out, h);

	const auto steps = static_cast<std::size_t>(cache.layers.front().xcat.size());
	std::vector<Eigen::MatrixXd> d_out(steps);
	d_out.back() = dense.transpose() * d_y;
	for (std::size_t l = layers_; l-- > 0;) {
		const auto& lc = cache.layers[l];
		const auto in = static_cast<Eigen::Index>(layer_input(l));
		const ConstMatrixMap w(params_.data() + weight_offset(l), 4 * h, in + h);
		MatrixMap g_w(gradient.data() + weight_offset(l), 4 * h, in + h);
		VectorMap g_b(gradient.data() + bias_offset(l), 4 * h);
		Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(h, batch);
		Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(h, batch);
		Eigen::MatrixXd dz(4 * h, batch);
		std::vector<Eigen::MatrixXd> d_in(steps);
		for (std::size_t t = steps; t-- > 0;) {
			Eigen::MatrixXd dh = dh_next;
			if (d_out[t].size()) {
				dh += lc.mask[t].size() ? d_out[t].cwiseProduct(lc.mask[t]) : d_out[t];
			}
			const auto& a = lc.act[t];
			const auto i = a.topRows(h).array();
			const auto f = a.middleRows(h, h).array();
			const auto g = a.middleRows(2 * h, h).array();
			const auto o = a.bottomRows(h).array();
			const auto tc = lc.tanh_cell[t].array();
			const Eigen::ArrayXXd c_prev =
			    t > 0 ? Eigen::ArrayXXd(lc.cell[t - 1].array()) : Eigen::ArrayXXd(Eigen::ArrayXXd::Zero(h, batch));
			const Eigen::ArrayXXd dc = dh.array() * o * (1.0 - tc.square()) + dc_next.array();
			dz.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
			dz.middleRows(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
			dz.middleRows(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
			dz.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();
			g_w.noalias() += dz * lc.xcat[t].transpose();
			g_b += dz.rowwise().sum();
			const Eigen::MatrixXd dx = w.transpose() * dz;
			if (l > 0) {
				d_in[t] = dx.topRows(in);
			}
			dh_next = dx.bottomRows(h);
			dc_next = (dc * f).matrix();
		}
		d_out = std::move(d_in);
	}
	return loss;
}

std::vector<NamedArray> Network::named_arrays() const {
	std::vector<NamedArray> out;
	auto slice = [&](std::size_t begin, std::size_t count) {
		return std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(begin),
		                           params_.begin() + static_cast<std::ptrdiff_t>(begin + count));
	};
	for (std::size_t l = 0; l < layers_; ++l) {
		const std::size_t cols = layer_input(l) + hidden_;
		const std::string prefix = "lstm" + std::to_string(l);
		out.push_back({prefix + ".w", {4 * hidden_, cols}, slice(weight_offset(l), 4 * hidden_ * cols)});
		out.push_back({prefix + ".b", {4 * hidden_}, slice(bias_offset(l), 4 * hidden_)});
	}
	out.push_back({"dense.w", {output_size_, hidden_}, slice(dense_offset(), output_size_ * hidden_)});
	out.push_back({"dense.b", {output_size_}, slice(dense_offset() + output_size_ * hidden_, output_size_)});
	return out;
}

Network Network::from_named_arrays(const std::vector<NamedArray>& arrays) {
	if (arrays.size() < 4 || arrays.size() % 2 != 0) {
		throw Error(ErrorCode::ShapeMismatch, "unexpected number of network arrays");
	}
	const std::size_t layers = arrays.size() / 2 - 1;
	const auto& first = arrays.front();
	const auto& head = arrays[arrays.size() - 2];
	if (first.shape.size() != 2 || head.shape.size() != 2 || first.shape[0] % 4 != 0) {
		throw Error(ErrorCode::ShapeMismatch, "malformed network arrays");
	}
	const std::size_t hidden = first.shape[0] / 4;
	if (first.shape[1] <= hidden) {
		throw Error(ErrorCode::ShapeMismatch, "malformed first layer");
	}
	Network net(first.shape[1] - hidden, hidden, layers, head.shape[0]);
	const auto expected = net.named_arrays();
	std::size_t offset = 0;
	for (std::size_t k = 0; k < arrays.size(); ++k) {
		if (arrays[k].name != expected[k].name || arrays[k].shape != expected[k].shape ||
		    arrays[k].data.size() != expected[k].data.size()) {
			throw Error(ErrorCode::ShapeMismatch, "array '" + arrays[k].name + "' does not fit the network layout");
		}
		std::copy(arrays[k].data.begin(), arrays[k].data.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(offset));
		offset += arrays[k].data.size();
	}
	return net;
}

Network train(const Windows& windows, const Params& params, std::size_t input_width, TrainHistory* history) {
	params.validate();
	if (windows.size() == 0) {
		throw Error(ErrorCode::EmptyData, "no training windows");
	}
	Network net(input_width, params.hidden_size, params.layers, params.output_size);
	net.initialize(params.seed);

	const std::size_t n = windows.size();
	const std::size_t n_valid =
	    params.validation_fraction > 0.0 && n >= 10
	        ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.validation_fraction * static_cast<double>(n))))
	        : 0;
	const std::size_t n_train = n - n_valid;

	std::vector<const Eigen::MatrixXd*> valid_x;
	std::vector<const Eigen::VectorXd*> valid_y;
	for (std::size_t i = n_train; i < n; ++i) {
		valid_x.push_back(&windows.inputs[i]);
		valid_y.push_back(&windows.targets[i]);
	}

	const std::size_t count = net.parameter_count();
	std::vector<double> grad(count), m(count, 0.0), v(count, 0.0);
	std::vector<double> best(net.parameters().begin(), net.parameters().end());
	double best_loss = std::numeric_limits<double>::infinity();
	TrainHistory local;
	core::CounterRng dropout_rng(params.seed, kDropoutStream);
	std::size_t step = 0;
	double beta1_power = 1.0;
	double beta2_power = 1.0;

	std::vector<std::size_t> order(n_train);
	std::vector<const Eigen::MatrixXd*> batch_x;
	std::vector<const Eigen::VectorXd*> batch_y;
	for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
		std::iota(order.begin(), order.end(), 0);
		core::CounterRng shuffle(params.seed, kShuffleStream + epoch);
		for (std::size_t i = n_train; i > 1; --i) {
			std::swap(order[i - 1], order[shuffle.below(i)]);
		}
		double epoch_loss = 0.0;
		for (std::size_t start = 0; start < n_train; start += params.batch_size) {
			const std::size_t end = std::min(n_train, start + params.batch_size);
			batch_x.clear();
			batch_y.clear();
			for (std::size_t k = start; k < end; ++k) {
				batch_x.push_back(&windows.inputs[order[k]]);
				batch_y.push_back(&windows.targets[order[k]]);
			}
			const double loss = net.batch_loss(batch_x, batch_y, params.dropout_rate, &dropout_rng, grad);
			if (!std::isfinite(loss)) {
				throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch + 1) +
				                                          ", batch starting at " + std::to_string(start));
			}
			epoch_loss += loss * static_cast<double>(end - start);

			double norm = 0.0;
			for (const double g : grad) {
				norm += g * g;
			}
			norm = std::sqrt(norm);
			const double clip = norm > params.clip_norm ? params.clip_norm / norm : 1.0;

			++step;
			beta1_power *= params.beta1;
			beta2_power *= params.beta2;
			auto p = net.parameters();
			for (std::size_t k = 0; k < count; ++k) {
				const double g = grad[k] * clip;
				m[k] = params.beta1 * m[k] + (1.0 - params.beta1) * g;
				v[k] = params.beta2 * v[k] + (1.0 - params.beta2) * g * g;
				const double m_hat = m[k] / (1.0 - beta1_power);
				const double v_hat = v[k] / (1.0 - beta2_power);
				p[k] -= params.learning_rate * m_hat / (std::sqrt(v_hat) + params.adam_epsilon);
			}
		}
		local.train_loss.push_back(epoch_loss / static_cast<double>(n_train));

		if (n_valid == 0) {
			local.best_epoch = epoch;
			continue;
		}
		const double valid_loss = net.batch_loss(valid_x, valid_y, 0.0, nullptr, {});
		if (!std::isfinite(valid_loss)) {
			throw Error(ErrorCode::NonFiniteLoss, "validation loss became non-finite at epoch " + std::to_string(epoch + 1));
		}
		local.validation_loss.push_back(valid_loss);
		if (valid_loss < best_loss) {
			best_loss = valid_loss;
			local.best_epoch = epoch;
			std::copy(net.parameters().begin(), net.parameters().end(), best.begin());
		} else if (epoch - local.best_epoch >= params.patience) {
			local.early_stopped = true;
			break;
		}
	}
	if (n_valid > 0) {
		std::copy(best.begin(), best.end(), net.parameters().begin());
	}
	if (history) {
		*history = std::move(local);
	}
	return net;
}

Model fit_frame(const core::FeatureFrame& train_frame, const Params& params, bool multivariate) {
	params.validate();
	const auto used = multivariate ? train_frame : train_frame.price_only();
	Model model;
	model.params = params;
	model.multivariate = multivariate;
	model.scaler = core::MinMaxScaler::fit(used);
	const auto windows = make_windows(model.scaler.transform(used), params.lookback, params.output_size, multivariate);
	model.network = train(windows, params, used.column_count(), &model.history);
	return model;
}

std::vector<double> forecast(const Model& model, const core::FeatureFrame& history, std::size_t horizon) {
	if (horizon == 0) {
		throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
	}
	if (horizon > model.network.output_size()) {
		throw Error(ErrorCode::HorizonTooLarge, "horizon " + std::to_string(horizon) + " exceeds the output width " +
		                                            std::to_string(model.network.output_size()));
	}
	const std::size_t lookback = model.params.lookback;
	if (history.rows() < lookback) {
		throw Error(ErrorCode::TooShort, "history shorter than the lookback window");
	}
	const auto used = (model.multivariate ? history : history.price_only()).slice(history.rows() - lookback, history.rows());
	const auto scaled = model.scaler.transform(used);
	const std::size_t width = used.column_count();
	if (width != model.network.input_width()) {
		throw Error(ErrorCode::ShapeMismatch, "history columns do not match the trained input width");
	}
	Eigen::MatrixXd input(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(lookback));
	for (std::size_t c = 0; c < width; ++c) {
		const auto values = scaled.dense(c);
		for (std::size_t t = 0; t < lookback; ++t) {
			input(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = values[t];
		}
	}
	const Eigen::VectorXd y = model.network.forward(input);
	const auto name = core::FeatureFrame(used).column_name(0);
	std::vector<double> out;
	for (std::size_t k = 0; k < horizon; ++k) {
		const double clamped = std::clamp(y[static_cast<Eigen::Index>(k)], 0.0, 1.0);
		out.push_back(model.scaler.inverse_value(name, clamped));
	}
	return out;
}

std::vector<double> forecast_extended(const Model& model, const core::FeatureFrame& history, std::size_t horizon) {
	const std::size_t block = model.network.output_size();
	if (horizon <= block) {
		return forecast(model, history, horizon);
	}
	std::vector<double> out;
	core::FeatureFrame current = model.multivariate ? history : history.price_only();
	while (out.size() < horizon) {
		const std::size_t take = std::min(block, horizon - out.size());
		const auto step = forecast(model, current, take);
		out.insert(out.end(), step.begin(), step.end());
		if (out.size() == horizon) {
			break;
		}
		auto timestamps = current.timestamps();
		std::vector<core::Cell> prices = current.cells(0);
		std::vector<core::Column> exogenous = current.exogenous();
		for (const double value : step) {
			timestamps.push_back(timestamps.back() + std::chrono::days(core::kDaysPerWeek));
			prices.push_back(value);
			for (auto& column : exogenous) {
				column.cells.push_back(column.cells.back());
			}
		}
		current = core::FeatureFrame(core::Series(std::move(timestamps), std::move(prices)), std::move(exogenous));
	}
	return out;
}

} // namespace agri::lstm
