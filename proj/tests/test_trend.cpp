#include "agri/core/matrix.hpp"
#include "agri/error.hpp"
#include "agri/models/trend.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace agri;
using namespace agri::trend;

namespace {

core::Series weekly(std::size_t n, auto&& f) {
	std::vector<double> v(n);
	for (std::size_t i = 0; i < n; ++i) v[i] = f(static_cast<double>(i) * 7.0);
	return core::Series::weekly(v);
}

std::vector<core::Date> weeks_after(core::Date last, std::size_t h) {
	std::vector<core::Date> out;
	for (std::size_t k = 1; k <= h; ++k) out.push_back(last + std::chrono::days(7 * static_cast<int>(k)));
	return out;
}

} // namespace

TEST_CASE("design matrix shape and basis values") {
	const auto s = weekly(200, [](double) { return 1.0; });
	const Timeline tl{s.timestamps().front(), 199.0 * 7.0};
	std::vector<double> cps;
	for (int j = 1; j <= 24; ++j) cps.push_back(0.03 * j);
	const Params p;
	const auto x = build_design_matrix(s.timestamps(), tl, cps, p);
	CHECK(x.cols() == 46);
	CHECK(x.rows() == 200);
	CHECK(x(0, 0) == 1.0);
	CHECK(x(0, 1) == 0.0);
	for (std::size_t k = 0; k < p.fourier_order; ++k) {
		CHECK(x(0, 2 + 24 + 2 * k) == 0.0);
		CHECK(x(0, 2 + 24 + 2 * k + 1) == 1.0);
	}
	for (std::size_t r = 0; r < x.rows(); ++r) {
		for (std::size_t j = 0; j < cps.size(); ++j) {
			if (x(r, 1) <= cps[j]) CHECK(x(r, 2 + j) == 0.0);
			else CHECK(x(r, 2 + j) == doctest::Approx(x(r, 1) - cps[j]));
		}
	}
}

TEST_CASE("one changepoint per month inside the first 80 percent") {
	const auto s = weekly(133, [](double d) { return 3.0 + 0.001 * d; });
	const double span = 132.0 * 7.0;
	CHECK(default_changepoint_count(span) == 30);
	const auto m = fit(s, {});
	CHECK(m.changepoints().size() == 30);
	CHECK(m.slope_deltas().size() == 30);
	for (std::size_t j = 0; j < m.changepoints().size(); ++j) {
		CHECK(m.changepoints()[j] > 0.0);
		CHECK(m.changepoints()[j] <= 0.8);
		if (j > 0) CHECK(m.changepoints()[j] > m.changepoints()[j - 1]);
	}
}

TEST_CASE("oracle: slope recovery matches closed-form OLS on linear series") {
	for (const double slope : {0.002, -0.0035, 0.01}) {
		const auto s = weekly(260, [&](double d) { return 4.0 + slope * d; });
		core::Matrix x(s.size(), 2);
		const auto y = s.dense();
		for (std::size_t i = 0; i < s.size(); ++i) {
			x(i, 0) = 1.0;
			x(i, 1) = 7.0 * static_cast<double>(i);
		}
		const auto o = core::ols(x, y);
		const auto m = fit(s, {});
		CHECK(std::abs(m.slope_per_day() - o.coefficients[1]) < 1e-6);
		CHECK(std::abs(m.base_intercept() - o.coefficients[0]) < 1e-6);
		for (const double delta : m.slope_deltas()) CHECK(std::abs(delta) < 1e-4);
		const auto f = m.forecast(10);
		for (std::size_t k = 0; k < 10; ++k) {
			const double day = 7.0 * static_cast<double>(s.size() + k);
			CHECK(f[k] == doctest::Approx(4.0 + slope * day).epsilon(1e-9));
		}
	}
}

TEST_CASE("annual sinusoid is carried by the seasonal terms") {
	const double period = 365.25;
	auto wave = [&](double d) { return 5.0 + 0.8 * std::sin(2.0 * std::numbers::pi * d / period); };
	const auto s = weekly(260, wave);
	const auto m = fit(s, {});
	CHECK(std::abs(m.slope_per_day()) * 365.25 < 0.01);
	const auto f = m.forecast(52);
	const auto dates = weeks_after(m.last_date(), 52);
	for (std::size_t k = 0; k < 52; ++k) {
		const double day = static_cast<double>((dates[k] - s.timestamps().front()).count());
		CHECK(std::abs(f[k] - wave(day)) < 0.02 * 0.8);
	}
}

TEST_CASE("zero coefficients forecast zero") {
	const Params p;
	const auto last = core::Series::default_start() + std::chrono::days(7 * 200);
	const Model m({core::Series::default_start(), 1400.0}, {0.2, 0.5}, std::vector<double>(2 + 2 + 20, 0.0), p, last);
	for (const double v : m.forecast(8)) CHECK(v == 0.0);
}

TEST_CASE("property: predictions equal design times coefficients") {
	const auto frame = testing::synthetic("chicken", 300);
	const auto m = fit(frame.base(), {});
	const auto x = m.design(frame.timestamps());
	const auto p = m.predict(frame.timestamps());
	for (std::size_t r = 0; r < x.rows(); ++r) {
		double s = 0.0;
		for (std::size_t c = 0; c < x.cols(); ++c) s += x(r, c) * m.coefficients()[c];
		CHECK(std::abs(p[r] - s) < 1e-9);
	}
}

TEST_CASE("property: fit is exactly reproducible") {
	const auto frame = testing::synthetic("chili", 300, 5, 0.02);
	CHECK(fit(frame.base(), {}).coefficients() == fit(frame.base(), {}).coefficients());
}

TEST_CASE("property: larger prior scale never increases the residual term") {
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		const auto frame = testing::synthetic("tomato", 400, seed);
		double previous = std::numeric_limits<double>::infinity();
		for (const double scale : prior_scale_grid()) {
			Params p;
			p.prior_scale = scale;
			FitSummary summary;
			fit(frame.base(), p, &summary);
			CHECK(summary.residual_ss <= previous * (1.0 + 1e-9));
			previous = summary.residual_ss;
		}
	}
}

TEST_CASE("missing prices are skipped") {
	const auto frame = testing::synthetic("chicken", 300, 27, 0.05);
	FitSummary summary;
	fit(frame.base(), {}, &summary);
	CHECK(summary.rows == frame.rows() - frame.base().missing_count());
}

TEST_CASE("multivariate mode adds unpenalized exogenous columns") {
	const auto frame = ingest::apply_missing_policy(testing::synthetic("chicken", 300), {});
	const auto m = fit(frame, {}, true);
	CHECK(m.multivariate());
	CHECK(m.exogenous_coeffs().size() == 4);
	CHECK(m.forecast(5).size() == 5);
	FitSummary uni, multi;
	fit(frame, {}, false, &uni);
	fit(frame, {}, true, &multi);
	CHECK(multi.residual_ss <= uni.residual_ss);
}

TEST_CASE("fit needs two seasonal cycles") {
	const auto s = weekly(103, [](double d) { return 1.0 + d; });
	try {
		fit(s, {});
		FAIL("expected TooShort");
	} catch (const Error& e) {
		CHECK(e.code() == ErrorCode::TooShort);
	}
	Params bad;
	bad.changepoint_range = 0.0;
	CHECK_THROWS_AS(bad.validate(), Error);
}
