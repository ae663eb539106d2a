#include "agri/error.hpp"
#include "agri/models/gbt.hpp"
#include "agri/models/windowing.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace agri;
using namespace agri::gbt;

namespace {

Params exact(std::size_t depth, std::size_t rounds) {
	Params p;
	p.max_depth = depth;
	p.n_estimators = rounds;
	p.subsample = 1.0;
	p.colsample_bytree = 1.0;
	return p;
}

struct Data {
	core::Matrix x;
	std::vector<double> y;
};

Data step_data(std::size_t n, std::size_t features, std::uint64_t seed) {
	core::CounterRng rng(seed, 9);
	Data d{core::Matrix(n, features), {}};
	const std::size_t signal = seed % features;
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t j = 0; j < features; ++j) {
			// Coarse grid so duplicate values occur.
			d.x(i, j) = std::round(rng.uniform() * 40.0) / 40.0;
		}
		d.y.push_back((d.x(i, signal) > 0.5 ? 1.0 : 0.0) + 0.1 * rng.normal());
	}
	return d;
}

struct Best {
	double gain = -1.0;
	std::vector<std::pair<std::size_t, double>> argmax;
};

/// Exhaustive root split scan over every midpoint of consecutive distinct values.
Best brute_force_root(const Data& d, double lambda) {
	const double base = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.y.size());
	std::vector<double> g;
	for (const double y : d.y) g.push_back(base - y);
	const double gt = std::accumulate(g.begin(), g.end(), 0.0);
	const double ht = static_cast<double>(g.size());
	Best best;
	for (std::size_t f = 0; f < d.x.cols(); ++f) {
		std::vector<double> values;
		for (std::size_t i = 0; i < d.x.rows(); ++i) values.push_back(d.x(i, f));
		std::sort(values.begin(), values.end());
		values.erase(std::unique(values.begin(), values.end()), values.end());
		for (std::size_t k = 1; k < values.size(); ++k) {
			const double thr = 0.5 * (values[k - 1] + values[k]);
			double gl = 0.0, hl = 0.0;
			for (std::size_t i = 0; i < d.x.rows(); ++i) {
				if (d.x(i, f) < thr) {
					gl += g[i];
					hl += 1.0;
				}
			}
			const double gain = 0.5 * (gl * gl / (hl + lambda) + (gt - gl) * (gt - gl) / (ht - hl + lambda) -
			                           gt * gt / (ht + lambda));
			if (gain > best.gain + 1e-12) {
				best.gain = gain;
				best.argmax = {{f, thr}};
			} else if (std::abs(gain - best.gain) <= 1e-12) {
				best.argmax.emplace_back(f, thr);
			}
		}
	}
	return best;
}

double train_mse(const Model& m, const Data& d) {
	double s = 0.0;
	for (std::size_t i = 0; i < d.y.size(); ++i) {
		const double r = m.predict(d.x.row(i)) - d.y[i];
		s += r * r;
	}
	return s / static_cast<double>(d.y.size());
}

} // namespace

TEST_CASE("split gain formula") {
	CHECK(split_gain(-2.0, 2.0, 0.0, 4.0, 0.0) == doctest::Approx(0.5 * (2.0 + 2.0)));
	CHECK(split_gain(1.0, 1.0, 2.0, 2.0, 1.0) == doctest::Approx(0.5 * (0.5 + 0.5 - 4.0 / 3.0)));
}

TEST_CASE("constant target is matched after one round") {
	Data d{core::Matrix(12, 2), std::vector<double>(12, 3.7)};
	for (std::size_t i = 0; i < 12; ++i) {
		d.x(i, 0) = static_cast<double>(i);
		d.x(i, 1) = static_cast<double>(i % 3);
	}
	auto p = exact(3, 1);
	p.learning_rate = 1.0;
	p.reg_lambda = 0.0;
	const auto m = fit(d.x, d.y, p);
	for (std::size_t i = 0; i < 12; ++i) CHECK(m.predict(d.x.row(i)) == doctest::Approx(3.7));
}

TEST_CASE("oracle: first split matches exhaustive midpoint enumeration") {
	for (std::uint64_t seed = 1; seed <= 20; ++seed) {
		CAPTURE(seed);
		const auto d = step_data(30 + 7 * seed, 1 + seed % 3, seed);
		const auto p = exact(1, 1);
		const auto m = fit(d.x, d.y, p);
		REQUIRE(m.trees().size() == 1);
		const auto& root = m.trees()[0].nodes[0];
		REQUIRE(root.feature >= 0);
		const auto oracle = brute_force_root(d, p.reg_lambda);
		CHECK(root.gain == doctest::Approx(oracle.gain).epsilon(1e-10));
		const bool listed = std::any_of(oracle.argmax.begin(), oracle.argmax.end(), [&](const auto& fa) {
			return fa.first == static_cast<std::size_t>(root.feature) && std::abs(fa.second - root.threshold) < 1e-12;
		});
		CHECK(listed);
		if (root.feature == static_cast<int>(seed % d.x.cols())) {
			CHECK(root.threshold > 0.4);
			CHECK(root.threshold < 0.6);
		}
	}
}

TEST_CASE("fits with seed 27 are reproducible") {
	const auto d = step_data(200, 4, 3);
	Params p;
	p.n_estimators = 40;
	const auto a = fit(d.x, d.y, p);
	const auto b = fit(d.x, d.y, p);
	REQUIRE(a.trees().size() == b.trees().size());
	for (std::size_t t = 0; t < a.trees().size(); ++t) {
		const auto& na = a.trees()[t].nodes;
		const auto& nb = b.trees()[t].nodes;
		REQUIRE(na.size() == nb.size());
		for (std::size_t i = 0; i < na.size(); ++i) {
			CHECK(na[i].feature == nb[i].feature);
			CHECK(na[i].threshold == nb[i].threshold);
			CHECK(na[i].weight == nb[i].weight);
		}
	}
	p.seed = 28;
	const auto c = fit(d.x, d.y, p);
	CHECK(train_mse(a, d) != train_mse(c, d));
}

TEST_CASE("prediction of empty and one-leaf models") {
	const Model empty({}, 2.5, {}, 0, 1);
	const std::vector<double> row{0.3};
	CHECK(empty.predict(row) == 2.5);
	Tree leaf;
	leaf.nodes.push_back(Node{});
	leaf.nodes[0].weight = -0.75;
	const Model one({leaf}, 2.5, {}, 1, 1);
	CHECK(one.predict(row) == 1.75);
	CHECK(leaf.depth() == 0);
}

TEST_CASE("property: training loss is non-increasing without sampling") {
	for (std::uint64_t seed = 1; seed <= 8; ++seed) {
		const auto d = step_data(150, 3, seed + 40);
		FitTrace trace;
		const auto m = fit(d.x, d.y, exact(4, 60), std::nullopt, &trace);
		REQUIRE(trace.train_mse.size() == m.trees().size());
		for (std::size_t r = 1; r < trace.train_mse.size(); ++r) CHECK(trace.train_mse[r] <= trace.train_mse[r - 1] + 1e-12);
		CHECK(trace.train_mse.back() == doctest::Approx(train_mse(m, d)).epsilon(1e-9));
	}
}

TEST_CASE("property: stored split gains are non-negative and recomputable") {
	const auto d = step_data(300, 4, 17);
	Params p;
	p.n_estimators = 30;
	const auto m = fit(d.x, d.y, p);
	for (const auto& tree : m.trees()) {
		CHECK(tree.depth() <= p.max_depth);
		for (const auto& node : tree.nodes) {
			if (node.feature < 0) continue;
			CHECK(node.gain > 0.0);
			const double again = split_gain(node.left_grad_sum, node.left_hess_sum, node.grad_sum, node.hess_sum, p.reg_lambda);
			CHECK(again == doctest::Approx(node.gain).epsilon(1e-9));
			CHECK(node.left_hess_sum >= p.min_child_weight);
			CHECK(node.hess_sum - node.left_hess_sum >= p.min_child_weight);
		}
	}
}

TEST_CASE("property: early stopping stays within the patience window") {
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		const auto train = step_data(200, 3, seed + 60);
		const auto valid = step_data(60, 3, seed + 60 + 1000);
		Params p;
		p.n_estimators = 400;
		p.early_stopping_rounds = 15;
		FitTrace trace;
		const auto m = fit(train.x, train.y, p, Validation{valid.x, valid.y}, &trace);
		const auto best = static_cast<std::size_t>(
		    std::min_element(trace.validation_mse.begin(), trace.validation_mse.end()) - trace.validation_mse.begin());
		CHECK(m.best_iteration() == best + 1);
		CHECK(m.best_iteration() <= m.trees().size());
		CHECK(m.trees().size() <= best + 1 + p.early_stopping_rounds);
	}
}

TEST_CASE("constant features degrade to the base score with a warning") {
	Data d{core::Matrix(20, 2, 1.0), {}};
	for (int i = 0; i < 20; ++i) d.y.push_back(i % 2);
	const auto m = fit(d.x, d.y, exact(3, 5));
	CHECK(m.warnings().size() == 1);
	CHECK(m.predict(d.x.row(0)) == doctest::Approx(0.5));
}

TEST_CASE("fit errors") {
	Data d{core::Matrix(9, 1), std::vector<double>(9, 0.0)};
	try {
		fit(d.x, d.y, {});
		FAIL("expected EmptyData");
	} catch (const Error& e) {
		CHECK(e.code() == ErrorCode::EmptyData);
	}
	Params bad;
	bad.learning_rate = 0.0;
	CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("frame forecasts follow the recursive contract") {
	const auto frame = ingest::apply_missing_policy(testing::synthetic("tomato", 200), {});
	auto p = Params{};
	p.n_estimators = 50;
	for (const bool multivariate : {false, true}) {
		const auto m = fit_frame(frame, p, multivariate);
		const auto f = forecast(m, frame, 9);
		CHECK(f.size() == 9);
		const auto used = multivariate ? frame : frame.price_only();
		CHECK(f[0] == m.model.predict(models::last_feature_row(used, p.window, multivariate)));
	}
	const std::vector<double> flat(60, 2.2);
	const auto c = fit_frame(testing::price_frame(flat), p, false);
	for (const double v : forecast(c, testing::price_frame(flat), 5)) CHECK(v == doctest::Approx(2.2));
}
