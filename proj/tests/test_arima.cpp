#include "agri/core/matrix.hpp"
#include "agri/error.hpp"
#include "agri/models/arima.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace agri;
using namespace agri::arima;

namespace {

Model make(Order order, double intercept, std::vector<double> ar, std::vector<double> ma, std::vector<double> anchors,
           std::vector<double> w_tail, std::vector<double> residual_tail = {}) {
	Model::State s;
	s.order = order;
	s.intercept = intercept;
	s.ar = std::move(ar);
	s.ma = std::move(ma);
	s.sigma2 = 1.0;
	s.level_anchors = std::move(anchors);
	s.w_tail = std::move(w_tail);
	s.residual_tail = std::move(residual_tail);
	return Model(std::move(s));
}

} // namespace

TEST_CASE("order validation") {
	CHECK(Order{1, 1, 1}.valid());
	CHECK(Order{0, 1, 0}.valid());
	CHECK_FALSE(Order{0, 0, 0}.valid());
	CHECK_FALSE(Order{6, 1, 0}.valid());
	CHECK_FALSE(Order{1, 3, 0}.valid());
	CHECK_FALSE(Order{0, 1, 6}.valid());
	CHECK(Order{2, 1, 1}.to_string() == "(2,1,1)");
}

TEST_CASE("oracle: AR(1) estimate agrees with OLS on lagged values") {
	const auto y = testing::ar1(1000, 0.6, 3, 0.1);
	const auto m = fit(std::span<const double>(y), {1, 0, 0});
	CHECK(m.ar_coeffs()[0] >= 0.5);
	CHECK(m.ar_coeffs()[0] <= 0.7);
	core::Matrix x(y.size() - 1, 2);
	std::vector<double> z;
	for (std::size_t t = 1; t < y.size(); ++t) {
		x(t - 1, 0) = 1.0;
		x(t - 1, 1) = y[t - 1];
		z.push_back(y[t]);
	}
	const auto o = core::ols(x, z);
	// CSS with p = 1 and zero pre-sample innovations is exactly this regression.
	CHECK(m.ar_coeffs()[0] == doctest::Approx(o.coefficients[1]).epsilon(1e-6));
	CHECK(m.intercept() == doctest::Approx(o.coefficients[0]).epsilon(1e-6));
}

TEST_CASE("MA(1) estimate") {
	const auto y = testing::ma1(2000, 0.4, 5);
	const auto m = fit(std::span<const double>(y), {0, 0, 1});
	CHECK(m.ma_coeffs()[0] >= 0.3);
	CHECK(m.ma_coeffs()[0] <= 0.5);
	const auto w = testing::gaussian_noise(2000, 6);
	CHECK(std::abs(fit(std::span<const double>(w), {0, 0, 1}).ma_coeffs()[0]) < 0.05);
}

TEST_CASE("random walk order forecasts the last value") {
	const auto m = make({0, 1, 0}, 0.0, {}, {}, {5.2}, {});
	CHECK(m.forecast(4) == std::vector<double>{5.2, 5.2, 5.2, 5.2});
	std::vector<double> y = testing::random_walk(100, 3);
	y.back() = 5.2;
	FitOptions no_drift;
	no_drift.include_intercept = false;
	for (const double v : fit(std::span<const double>(y), {0, 1, 0}, no_drift).forecast(4)) CHECK(v == 5.2);
}

TEST_CASE("AR(1) forecasts decay geometrically to the mean") {
	const auto m = make({1, 0, 0}, 0.0, {0.5}, {}, {}, {2.0});
	const auto f = m.forecast(3);
	CHECK(f[0] == doctest::Approx(1.0));
	CHECK(f[1] == doctest::Approx(0.5));
	CHECK(f[2] == doctest::Approx(0.25));
	const auto c = make({1, 0, 0}, 1.5, {0.5}, {}, {}, {2.0});
	CHECK(c.forecast(200).back() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("evaluate on AR(1) data approaches the innovation floor") {
	const auto y = testing::ar1(1000, 0.5, 21, 1.0, 1.0);
	const auto s = core::Series::weekly(y);
	const double m = evaluate(s, {1, 0, 0}, {});
	// Multi-step errors approach the process variance 1/(1-0.25) of sigma^2.
	CHECK(m < 2.0);
	CHECK(m > 0.3);
}

TEST_CASE("evaluate on a deterministic trend is near zero") {
	std::vector<double> y(200);
	for (std::size_t i = 0; i < y.size(); ++i) y[i] = 3.0 + 0.01 * static_cast<double>(i);
	CHECK(evaluate(core::Series::weekly(y), {0, 1, 0}, {}) < 1e-18);
}

TEST_CASE("fit errors") {
	const std::vector<double> short_series(25, 1.0);
	CHECK_THROWS_AS(fit(std::span<const double>(short_series), {1, 1, 1}), Error);
	std::vector<double> bad = testing::random_walk(100, 1);
	bad[50] = std::nan("");
	try {
		fit(std::span<const double>(bad), {1, 1, 0});
		FAIL("expected DegenerateSeries");
	} catch (const Error& e) {
		CHECK(e.code() == ErrorCode::DegenerateSeries);
	}
}

TEST_CASE("root checks and reflection") {
	const std::vector<double> explosive{1.5};
	CHECK_FALSE(is_stationary(explosive));
	const auto r = reflect_ar(explosive);
	CHECK(is_stationary(r));
	CHECK(r[0] == doctest::Approx(1.0 / 1.5));
	const std::vector<double> noninv{2.0};
	CHECK_FALSE(is_invertible(noninv));
	CHECK(is_invertible(reflect_ma(noninv)));
	const std::vector<double> ok{0.5, 0.2};
	CHECK(is_stationary(ok));
	CHECK(reflect_ar(ok)[0] == doctest::Approx(0.5));
}

TEST_CASE("property: fitted models are stationary, invertible and deterministic") {
	for (std::uint64_t seed = 1; seed <= 8; ++seed) {
		const auto y = testing::random_walk(400, seed, 5.0, 0.2);
		for (const Order o : {Order{1, 1, 1}, Order{2, 1, 1}, Order{0, 1, 2}, Order{2, 1, 0}}) {
			const auto a = fit(std::span<const double>(y), o);
			const auto b = fit(std::span<const double>(y), o);
			CHECK(is_stationary(a.ar_coeffs()));
			CHECK(is_invertible(a.ma_coeffs()));
			CHECK(a.sigma2() > 0.0);
			CHECK(a.forecast(10) == b.forecast(10));
		}
	}
}

TEST_CASE("property: residual mean is near zero with an intercept") {
	for (std::uint64_t seed = 1; seed <= 8; ++seed) {
		const auto y = testing::ar1(500, 0.6, seed, 0.5, 2.0);
		const auto m = fit(std::span<const double>(y), {1, 0, 1});
		const auto e = css_residuals(y, m.intercept(), m.ar_coeffs(), m.ma_coeffs());
		const double mean = std::accumulate(e.begin() + 1, e.end(), 0.0) / static_cast<double>(e.size() - 1);
		double ss = 0.0;
		for (const double x : y) ss += (x - 2.0 / 0.4) * (x - 2.0 / 0.4);
		CHECK(std::abs(mean) < 0.05 * std::sqrt(ss / static_cast<double>(y.size())));
	}
}

TEST_CASE("property: forecasts are shift equivariant under d = 1") {
	for (std::uint64_t seed = 1; seed <= 10; ++seed) {
		auto y = testing::random_walk(300, seed, 5.0, 0.15);
		for (const Order o : {Order{1, 1, 1}, Order{2, 1, 1}, Order{1, 1, 0}}) {
			const auto base = fit(std::span<const double>(y), o).forecast(12);
			auto shifted = y;
			for (auto& v : shifted) v += 7.0;
			const auto moved = fit(std::span<const double>(shifted), o).forecast(12);
			for (std::size_t h = 0; h < base.size(); ++h) CHECK(std::abs(moved[h] - base[h] - 7.0) < 1e-6);
		}
	}
}

TEST_CASE("aic follows its definition") {
	const auto y = testing::ar1(300, 0.5, 2);
	const auto m = fit(std::span<const double>(y), {1, 0, 1});
	const double n = static_cast<double>(m.nobs());
	CHECK(m.aic() == doctest::Approx(n * std::log(m.css() / n) + 2.0 * (3 + 1)));
}
