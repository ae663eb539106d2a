#include "agri/engine/engine.hpp"

#include "agri/error.hpp"

namespace agri::engine {

using nlohmann::json;

namespace {

json array_doc(std::vector<std::size_t> shape, std::vector<double> data) {
	return json{{"shape", std::move(shape)}, {"data", std::move(data)}};
}

json vector_doc(const std::vector<double>& data) {
	return array_doc({data.size()}, data);
}

std::vector<double> read_array(const json& doc, std::string_view name, std::vector<std::size_t>* shape = nullptr) {
	const auto& arrays = doc.at("arrays");
	const auto& entry = arrays.at(std::string(name));
	auto data = entry.at("data").get<std::vector<double>>();
	auto dims = entry.at("shape").get<std::vector<std::size_t>>();
	std::size_t expected = 1;
	for (const auto d : dims) {
		expected *= d;
	}
	if (expected != data.size()) {
		throw Error(ErrorCode::CorruptArtifact, "array '" + std::string(name) + "' does not match its shape");
	}
	if (shape) {
		*shape = std::move(dims);
	}
	return data;
}

json ranges_doc(const std::vector<core::MinMaxScaler::Range>& ranges) {
	json out = json::array();
	for (const auto& r : ranges) {
		out.push_back({{"name", r.name}, {"min", r.min}, {"max", r.max}});
	}
	return out;
}

std::vector<core::MinMaxScaler::Range> read_ranges(const json& doc) {
	std::vector<core::MinMaxScaler::Range> out;
	for (const auto& r : doc) {
		out.push_back({r.at("name").get<std::string>(), r.at("min").get<double>(), r.at("max").get<double>()});
	}
	return out;
}

json hyper_doc(const Hyperparameters& hyper) {
	return std::visit(
	    [](const auto& h) -> json {
		    using T = std::decay_t<decltype(h)>;
		    if constexpr (std::is_same_v<T, arima::Order>) {
			    return {{"p", h.p}, {"d", h.d}, {"q", h.q}};
		    } else if constexpr (std::is_same_v<T, trend::Params>) {
			    return {{"changepoint_count", h.changepoint_count ? json(*h.changepoint_count) : json(nullptr)},
			            {"changepoint_range", h.changepoint_range},
			            {"prior_scale", h.prior_scale},
			            {"fourier_order", h.fourier_order},
			            {"season_period", h.season_period}};
		    } else if constexpr (std::is_same_v<T, svr::Params>) {
			    return {{"c", h.c},
			            {"epsilon", h.epsilon},
			            {"gamma", h.gamma ? json(*h.gamma) : json(nullptr)},
			            {"window", h.window},
			            {"tolerance", h.tolerance},
			            {"max_passes", h.max_passes}};
		    } else if constexpr (std::is_same_v<T, gbt::Params>) {
			    return {{"learning_rate", h.learning_rate},
			            {"max_depth", h.max_depth},
			            {"n_estimators", h.n_estimators},
			            {"subsample", h.subsample},
			            {"colsample_bytree", h.colsample_bytree},
			            {"reg_lambda", h.reg_lambda},
			            {"early_stopping_rounds", h.early_stopping_rounds},
			            {"seed", h.seed},
			            {"min_child_weight", h.min_child_weight},
			            {"scale_pos_weight", h.scale_pos_weight},
			            {"window", h.window}};
		    } else {
			    return {{"epochs", h.epochs},
			            {"batch_size", h.batch_size},
			            {"layers", h.layers},
			            {"hidden_size", h.hidden_size},
			            {"dropout_rate", h.dropout_rate},
			            {"output_size", h.output_size},
			            {"lookback", h.lookback},
			            {"learning_rate", h.learning_rate},
			            {"beta1", h.beta1},
			            {"beta2", h.beta2},
			            {"adam_epsilon", h.adam_epsilon},
			            {"clip_norm", h.clip_norm},
			            {"validation_fraction", h.validation_fraction},
			            {"patience", h.patience},
			            {"seed", h.seed}};
		    }
	    },
	    hyper);
}

Hyperparameters read_hyper(Family family, const json& h) {
	switch (family) {
	case Family::Arima:
		return arima::Order{h.at("p").get<std::size_t>(), h.at("d").get<std::size_t>(), h.at("q").get<std::size_t>()};
	case Family::Trend: {
		trend::Params p;
		if (!h.at("changepoint_count").is_null()) {
			p.changepoint_count = h.at("changepoint_count").get<std::size_t>();
		}
		p.changepoint_range = h.at("changepoint_range").get<double>();
		p.prior_scale = h.at("prior_scale").get<double>();
		p.fourier_order = h.at("fourier_order").get<std::size_t>();
		p.season_period = h.at("season_period").get<double>();
		return p;
	}
	case Family::Svr: {
		svr::Params p;
		p.c = h.at("c").get<double>();
		p.epsilon = h.at("epsilon").get<double>();
		if (!h.at("gamma").is_null()) {
			p.gamma = h.at("gamma").get<double>();
		}
		p.window = h.at("window").get<std::size_t>();
		p.tolerance = h.at("tolerance").get<double>();
		p.max_passes = h.at("max_passes").get<std::size_t>();
		return p;
	}
	case Family::Gbt: {
		gbt::Params p;
		p.learning_rate = h.at("learning_rate").get<double>();
		p.max_depth = h.at("max_depth").get<std::size_t>();
		p.n_estimators = h.at("n_estimators").get<std::size_t>();
		p.subsample = h.at("subsample").get<double>();
		p.colsample_bytree = h.at("colsample_bytree").get<double>();
		p.reg_lambda = h.at("reg_lambda").get<double>();
		p.early_stopping_rounds = h.at("early_stopping_rounds").get<std::size_t>();
		p.seed = h.at("seed").get<std::uint64_t>();
		p.min_child_weight = h.at("min_child_weight").get<double>();
		p.scale_pos_weight = h.at("scale_pos_weight").get<double>();
		p.window = h.at("window").get<std::size_t>();
		return p;
	}
	case Family::Lstm: {
		lstm::Params p;
		p.epochs = h.at("epochs").get<std::size_t>();
		p.batch_size = h.at("batch_size").get<std::size_t>();
		p.layers = h.at("layers").get<std::size_t>();
		p.hidden_size = h.at("hidden_size").get<std::size_t>();
		p.dropout_rate = h.at("dropout_rate").get<double>();
		p.output_size = h.at("output_size").get<std::size_t>();
		p.lookback = h.at("lookback").get<std::size_t>();
		p.learning_rate = h.at("learning_rate").get<double>();
		p.beta1 = h.at("beta1").get<double>();
		p.beta2 = h.at("beta2").get<double>();
		p.adam_epsilon = h.at("adam_epsilon").get<double>();
		p.clip_norm = h.at("clip_norm").get<double>();
		p.validation_fraction = h.at("validation_fraction").get<double>();
		p.patience = h.at("patience").get<std::size_t>();
		p.seed = h.at("seed").get<std::uint64_t>();
		return p;
	}
	}
	throw Error(ErrorCode::InvalidSpec, "unknown family");
}

class ArimaModel final : public TrainedModel {
public:
	ArimaModel(ModelSpec spec, arima::Model model) : TrainedModel(std::move(spec)), model_(std::move(model)) {}

	std::vector<double> forecast(const core::FeatureFrame&, std::size_t horizon) const override {
		return model_.forecast(horizon);
	}

	json to_json() const override {
		const auto& s = model_.state();
		return {{"scalars", {{"intercept", s.intercept}, {"sigma2", s.sigma2}, {"css", s.css}, {"nobs", s.nobs}}},
		        {"arrays",
		         {{"ar", vector_doc(s.ar)},
		          {"ma", vector_doc(s.ma)},
		          {"level_anchors", vector_doc(s.level_anchors)},
		          {"w_tail", vector_doc(s.w_tail)},
		          {"residual_tail", vector_doc(s.residual_tail)}}}};
	}

	static std::unique_ptr<TrainedModel> load(const ModelSpec& spec, const json& doc) {
		arima::Model::State s;
		s.order = std::get<arima::Order>(spec.hyper);
		const auto& scalars = doc.at("scalars");
		s.intercept = scalars.at("intercept").get<double>();
		s.sigma2 = scalars.at("sigma2").get<double>();
		s.css = scalars.at("css").get<double>();
		s.nobs = scalars.at("nobs").get<std::size_t>();
		s.ar = read_array(doc, "ar");
		s.ma = read_array(doc, "ma");
		s.level_anchors = read_array(doc, "level_anchors");
		s.w_tail = read_array(doc, "w_tail");
		s.residual_tail = read_array(doc, "residual_tail");
		return std::make_unique<ArimaModel>(spec, arima::Model(std::move(s)));
	}

private:
	arima::Model model_;
};

class TrendModel final : public TrainedModel {
public:
	TrendModel(ModelSpec spec, trend::Model model) : TrainedModel(std::move(spec)), model_(std::move(model)) {}

	std::vector<double> forecast(const core::FeatureFrame&, std::size_t horizon) const override {
		return model_.forecast(horizon);
	}

	json to_json() const override {
		return {{"scalars",
		         {{"origin", core::format_date(model_.timeline().origin)},
		          {"span_days", model_.timeline().span_days},
		          {"last_date", core::format_date(model_.last_date())}}},
		        {"exogenous_ranges", ranges_doc(model_.exogenous_ranges())},
		        {"arrays",
		         {{"changepoints", vector_doc(model_.changepoints())},
		          {"coefficients", vector_doc(model_.coefficients())},
		          {"last_exogenous", vector_doc(model_.last_exogenous())}}}};
	}

	static std::unique_ptr<TrainedModel> load(const ModelSpec& spec, const json& doc) {
		const auto& scalars = doc.at("scalars");
		trend::Timeline timeline{core::parse_date(scalars.at("origin").get<std::string>()),
		                         scalars.at("span_days").get<double>()};
		trend::Model model(timeline, read_array(doc, "changepoints"), read_array(doc, "coefficients"),
		                   std::get<trend::Params>(spec.hyper), core::parse_date(scalars.at("last_date").get<std::string>()),
		                   read_ranges(doc.at("exogenous_ranges")), read_array(doc, "last_exogenous"));
		return std::make_unique<TrendModel>(spec, std::move(model));
	}

private:
	trend::Model model_;
};

class SvrModel final : public TrainedModel {
public:
	SvrModel(ModelSpec spec, svr::FrameModel model, std::vector<std::string> warnings)
	    : TrainedModel(std::move(spec)), model_(std::move(model)), warnings_(std::move(warnings)) {}

	std::vector<double> forecast(const core::FeatureFrame& history, std::size_t horizon) const override {
		return svr::forecast(model_, history, horizon);
	}

	std::vector<std::string> warnings() const override {
		return warnings_;
	}

	json to_json() const override {
		const auto& m = model_.model;
		return {{"scalars",
		         {{"bias", m.bias()},
		          {"gamma", m.gamma()},
		          {"feature_count", m.feature_count()},
		          {"multivariate", model_.multivariate}}},
		        {"feature_ranges", ranges_doc(m.feature_ranges())},
		        {"target_range", ranges_doc({*m.target_range()})},
		        {"scaler", ranges_doc(model_.scaler.ranges())},
		        {"arrays",
		         {{"support_vectors", array_doc({m.support_vectors().rows(), m.support_vectors().cols()},
		                                        m.support_vectors().data())},
		          {"dual_coeffs", vector_doc(m.dual_coeffs())}}}};
	}

	static std::unique_ptr<TrainedModel> load(const ModelSpec& spec, const json& doc) {
		const auto& scalars = doc.at("scalars");
		std::vector<std::size_t> shape;
		auto sv_data = read_array(doc, "support_vectors", &shape);
		if (shape.size() != 2) {
			throw Error(ErrorCode::CorruptArtifact, "support_vectors must be two-dimensional");
		}
		core::Matrix sv(shape[0], shape[1]);
		sv.data() = std::move(sv_data);
		svr::Model m(std::move(sv), read_array(doc, "dual_coeffs"), scalars.at("bias").get<double>(),
		             std::get<svr::Params>(spec.hyper), scalars.at("gamma").get<double>());
		const auto target = read_ranges(doc.at("target_range"));
		if (target.size() != 1) {
			throw Error(ErrorCode::CorruptArtifact, "target_range must hold one range");
		}
		m.set_scaling(read_ranges(doc.at("feature_ranges")), target.front());
		m.set_feature_count(scalars.at("feature_count").get<std::size_t>());
		svr::FrameModel fm{std::move(m), core::MinMaxScaler(read_ranges(doc.at("scaler"))),
		                   scalars.at("multivariate").get<bool>()};
		return std::make_unique<SvrModel>(spec, std::move(fm), std::vector<std::string>{});
	}

private:
	svr::FrameModel model_;
	std::vector<std::string> warnings_;
};

class GbtModel final : public TrainedModel {
public:
	GbtModel(ModelSpec spec, gbt::FrameModel model) : TrainedModel(std::move(spec)), model_(std::move(model)) {}

	std::vector<double> forecast(const core::FeatureFrame& history, std::size_t horizon) const override {
		return gbt::forecast(model_, history, horizon);
	}

	std::vector<std::string> warnings() const override {
		return model_.model.warnings();
	}

	json to_json() const override {
		const auto& m = model_.model;
		json trees = json::array();
		for (const auto& tree : m.trees()) {
			std::vector<double> feature, threshold, left, right, weight, gain, grad, hess;
			for (const auto& node : tree.nodes) {
				feature.push_back(node.feature);
				threshold.push_back(node.threshold);
				left.push_back(node.left);
				right.push_back(node.right);
				weight.push_back(node.weight);
				gain.push_back(node.gain);
				grad.push_back(node.grad_sum);
				hess.push_back(node.hess_sum);
			}
			trees.push_back({{"feature", feature},
			                 {"threshold", threshold},
			                 {"left", left},
			                 {"right", right},
			                 {"weight", weight},
			                 {"gain", gain},
			                 {"grad_sum", grad},
			                 {"hess_sum", hess}});
		}
		return {{"scalars",
		         {{"base_score", m.base_score()},
		          {"best_iteration", m.best_iteration()},
		          {"feature_count", m.feature_count()},
		          {"multivariate", model_.multivariate}}},
		        {"warnings", m.warnings()},
		        {"trees", trees}};
	}

	static std::unique_ptr<TrainedModel> load(const ModelSpec& spec, const json& doc) {
		std::vector<gbt::Tree> trees;
		for (const auto& t : doc.at("trees")) {
			const auto feature = t.at("feature").get<std::vector<double>>();
			const auto threshold = t.at("threshold").get<std::vector<double>>();
			const auto left = t.at("left").get<std::vector<double>>();
			const auto right = t.at("right").get<std::vector<double>>();
			const auto weight = t.at("weight").get<std::vector<double>>();
			const auto gain = t.at("gain").get<std::vector<double>>();
			const auto grad = t.at("grad_sum").get<std::vector<double>>();
			const auto hess = t.at("hess_sum").get<std::vector<double>>();
			const std::size_t n = feature.size();
			if (threshold.size() != n || left.size() != n || right.size() != n || weight.size() != n ||
			    gain.size() != n || grad.size() != n || hess.size() != n) {
				throw Error(ErrorCode::CorruptArtifact, "tree arrays differ in length");
			}
			gbt::Tree tree;
			for (std::size_t i = 0; i < n; ++i) {
				gbt::Node node;
				node.feature = static_cast<int>(feature[i]);
				node.threshold = threshold[i];
				node.left = static_cast<int>(left[i]);
				node.right = static_cast<int>(right[i]);
				node.weight = weight[i];
				node.gain = gain[i];
				node.grad_sum = grad[i];
				node.hess_sum = hess[i];
				const auto limit = static_cast<int>(n);
				if (node.feature >= 0 && (node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) ||
				                          node.left >= limit || node.right >= limit)) {
					throw Error(ErrorCode::CorruptArtifact, "tree child index out of range");
				}
				tree.nodes.push_back(node);
			}
			trees.push_back(std::move(tree));
		}
		const auto& scalars = doc.at("scalars");
		gbt::Model m(std::move(trees), scalars.at("base_score").get<double>(), std::get<gbt::Params>(spec.hyper),
		             scalars.at("best_iteration").get<std::size_t>(), scalars.at("feature_count").get<std::size_t>());
		for (const auto& w : doc.at("warnings")) {
			m.add_warning(w.get<std::string>());
		}
		return std::make_unique<GbtModel>(spec, gbt::FrameModel{std::move(m), scalars.at("multivariate").get<bool>()});
	}

private:
	gbt::FrameModel model_;
};

class LstmModel final : public TrainedModel {
public:
	LstmModel(ModelSpec spec, lstm::Model model) : TrainedModel(std::move(spec)), model_(std::move(model)) {}

	std::vector<double> forecast(const core::FeatureFrame& history, std::size_t horizon) const override {
		return lstm::forecast_extended(model_, history, horizon);
	}

	json to_json() const override {
		json arrays = json::object();
		for (const auto& a : model_.network.named_arrays()) {
			arrays[a.name] = array_doc(a.shape, a.data);
		}
		std::vector<std::string> order;
		for (const auto& a : model_.network.named_arrays()) {
			order.push_back(a.name);
		}
		return {{"scalars", {{"multivariate", model_.multivariate}, {"best_epoch", model_.history.best_epoch}}},
		        {"scaler", ranges_doc(model_.scaler.ranges())},
		        {"array_order", order},
		        {"arrays", arrays}};
	}

	static std::unique_ptr<TrainedModel> load(const ModelSpec& spec, const json& doc) {
		std::vector<lstm::NamedArray> arrays;
		for (const auto& name : doc.at("array_order")) {
			lstm::NamedArray a;
			a.name = name.get<std::string>();
			a.data = read_array(doc, a.name, &a.shape);
			arrays.push_back(std::move(a));
		}
		lstm::Model m;
		try {
			m.network = lstm::Network::from_named_arrays(arrays);
		} catch (const Error& e) {
			throw Error(ErrorCode::CorruptArtifact, e.what());
		}
		m.params = std::get<lstm::Params>(spec.hyper);
		m.scaler = core::MinMaxScaler(read_ranges(doc.at("scaler")));
		m.multivariate = doc.at("scalars").at("multivariate").get<bool>();
		m.history.best_epoch = doc.at("scalars").at("best_epoch").get<std::size_t>();
		return std::make_unique<LstmModel>(spec, std::move(m));
	}

private:
	lstm::Model model_;
};

} // namespace

json spec_to_json(const ModelSpec& spec) {
	return {{"family", to_string(spec.family)}, {"mode", to_string(spec.mode)}, {"hyperparameters", hyper_doc(spec.hyper)}};
}

ModelSpec spec_from_json(const json& doc) {
	try {
		ModelSpec spec;
		spec.family = parse_family(doc.at("family").get<std::string>());
		spec.mode = parse_mode(doc.at("mode").get<std::string>());
		spec.hyper = read_hyper(spec.family, doc.at("hyperparameters"));
		spec.validate();
		return spec;
	} catch (const json::exception& e) {
		throw Error(ErrorCode::CorruptArtifact, std::string("malformed spec: ") + e.what());
	}
}

std::unique_ptr<TrainedModel> fit(const ModelSpec& spec, const core::FeatureFrame& train) {
	spec.validate();
	const bool multi = spec.mode == Mode::Multivariate;
	const auto used = select_columns(train, spec.mode);
	switch (spec.family) {
	case Family::Arima:
		return std::make_unique<ArimaModel>(spec, arima::fit(used.base(), std::get<arima::Order>(spec.hyper)));
	case Family::Trend:
		return std::make_unique<TrendModel>(spec, trend::fit(used, std::get<trend::Params>(spec.hyper), multi));
	case Family::Svr:
		return std::make_unique<SvrModel>(spec, svr::fit_frame(used, std::get<svr::Params>(spec.hyper), multi),
		                                  std::vector<std::string>{});
	case Family::Gbt:
		return std::make_unique<GbtModel>(spec, gbt::fit_frame(used, std::get<gbt::Params>(spec.hyper), multi));
	case Family::Lstm:
		return std::make_unique<LstmModel>(spec, lstm::fit_frame(used, std::get<lstm::Params>(spec.hyper), multi));
	}
	throw Error(ErrorCode::InvalidSpec, "unknown family");
}

std::unique_ptr<TrainedModel> model_from_json(const ModelSpec& spec, const json& doc) {
	try {
		switch (spec.family) {
		case Family::Arima:
			return ArimaModel::load(spec, doc);
		case Family::Trend:
			return TrendModel::load(spec, doc);
		case Family::Svr:
			return SvrModel::load(spec, doc);
		case Family::Gbt:
			return GbtModel::load(spec, doc);
		case Family::Lstm:
			return LstmModel::load(spec, doc);
		}
	} catch (const json::exception& e) {
		throw Error(ErrorCode::CorruptArtifact, std::string("malformed model document: ") + e.what());
	}
	throw Error(ErrorCode::CorruptArtifact, "unknown family");
}

} // namespace agri::engine
