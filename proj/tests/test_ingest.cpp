#include "agri/error.hpp"
#include "agri/ingest/ingest.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace std::string_literals;

using namespace agri;
using namespace agri::ingest;

namespace {

const std::string kHeader(kCsvHeader);

LoadResult load(const std::string& text, std::string_view commodity = "chicken") {
	std::istringstream in(text);
	return load_csv(in, commodity);
}

ErrorCode code_of(auto&& fn) {
	try {
		fn();
	} catch (const Error& e) {
		return e.code();
	}
	FAIL("expected agri::Error");
	return ErrorCode::IoError;
}

std::string error_message(auto&& fn) {
	try {
		fn();
	} catch (const Error& e) {
		return e.what();
	}
	return {};
}

core::FeatureFrame prices(std::vector<core::Cell> cells) {
	std::vector<core::Date> dates;
	for (std::size_t i = 0; i < cells.size(); ++i) {
		dates.push_back(core::Series::default_start() + std::chrono::days(7 * static_cast<int>(i)));
	}
	return core::FeatureFrame(core::Series(dates, std::move(cells)));
}

struct Stats {
	double mean, sd, min, max;
	std::size_t missing;
};

Stats price_stats(const core::FeatureFrame& f) {
	std::vector<double> v;
	std::size_t missing = 0;
	for (const auto& c : f.cells(0)) {
		if (c) v.push_back(*c);
		else ++missing;
	}
	const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
	double ss = 0.0;
	for (const double x : v) ss += (x - mean) * (x - mean);
	return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1)), *std::min_element(v.begin(), v.end()),
	        *std::max_element(v.begin(), v.end()), missing};
}

} // namespace

TEST_CASE("load sorts rows out of order") {
	const auto r = load(kHeader + "\n2020-01-13,chicken,5.1,,,,\n2020-01-06,chicken,5.0,,,,\n");
	REQUIRE(r.frame.rows() == 2);
	CHECK(core::format_date(r.frame.timestamps()[0]) == "2020-01-06");
	CHECK(r.frame.cells(0)[0] == 5.0);
}

TEST_CASE("load keeps the first of duplicate weeks and warns") {
	const auto r = load(kHeader + "\n2020-01-06,chicken,5.0,,,,\n2020-01-08,chicken,9.0,,,,\n2020-01-13,chicken,5.1,,,,\n");
	CHECK(r.frame.rows() == 2);
	CHECK(r.frame.cells(0)[0] == 5.0);
	CHECK(r.warnings.size() == 1);
}

TEST_CASE("load fills a skipped week with a missing cell") {
	const auto r = load(kHeader + "\n2020-01-06,chicken,5.0,,,,\n2020-01-20,chicken,5.2,,,,\n");
	REQUIRE(r.frame.rows() == 3);
	CHECK_FALSE(r.frame.cells(0)[1].has_value());
	CHECK(core::format_date(r.frame.timestamps()[1]) == "2020-01-13");
}

TEST_CASE("load errors name the row and column") {
	const auto msg = error_message([] { load(kHeader + "\n2020-01-06,chicken,5.0,,,,\n2020-01-13,chicken,abc,,,,\n"); });
	CHECK(msg.find("line 3") != std::string::npos);
	CHECK(msg.find("price_myr") != std::string::npos);
	CHECK(code_of([] { load(kHeader + "\n2020-01-06,chicken,5.0,,,,\n"s.replace(0, 4, "DATE")); }) == ErrorCode::ParseError);
	CHECK(code_of([] { load(""); }) == ErrorCode::EmptyFile);
	CHECK(code_of([] { load(kHeader + "\n2020-01-06,chicken,5.0,,,,\n", "durian"); }) == ErrorCode::UnknownCommodity);
	CHECK(code_of([] { load(kHeader + "\n2020-01-06,chicken,-1,,,,\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("exogenous columns with no observations are omitted") {
	const auto r = load(kHeader + "\n2020-01-06,chicken,5.0,30.1,,,60\n2020-01-13,chicken,5.1,29.5,,,61\n");
	CHECK(r.frame.column_count() == 3);
	CHECK(r.frame.has_column(core::kTemperature));
	CHECK(r.frame.has_column(core::kCrudeOil));
	CHECK_FALSE(r.frame.has_column(core::kHumidity));
}

TEST_CASE("missing policy examples") {
	const auto f = prices({4.0, std::nullopt, 5.0});
	const auto s = apply_missing_policy(f, {MissingStrategy::SentinelFill});
	CHECK(s.cells(0)[1] == -99999.0);
	CHECK(s.rows() == 3);
	const auto d = apply_missing_policy(f, {MissingStrategy::DropRows});
	REQUIRE(d.rows() == 2);
	CHECK(d.cells(0)[1] == 5.0);
	const auto l = apply_missing_policy(prices({std::nullopt, 3.0}), {MissingStrategy::ForwardFill});
	CHECK(l.cells(0)[0] == 3.0);
	CHECK(l.cells(0)[1] == 3.0);
	CHECK(apply_missing_policy(f, {MissingStrategy::ForwardFill}).cells(0)[1] == 4.0);
	CHECK(code_of([] { apply_missing_policy(prices({std::nullopt, std::nullopt}), {MissingStrategy::DropRows}); }) ==
	      ErrorCode::AllMissingColumn);
	CHECK(parse_strategy("ffill") == MissingStrategy::ForwardFill);
	CHECK(code_of([] { parse_strategy("mean"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: drop leaves no missing cells and sentinel keeps rows") {
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		const auto f = testing::synthetic("tomato", 200, seed, 0.05);
		REQUIRE(f.missing_count() > 0);
		CHECK(apply_missing_policy(f, {MissingStrategy::DropRows}).missing_count() == 0);
		CHECK(apply_missing_policy(f, {MissingStrategy::ForwardFill}).missing_count() == 0);
		const auto s = apply_missing_policy(f, {MissingStrategy::SentinelFill});
		CHECK(s.rows() == f.rows());
		CHECK(s.missing_count() == 0);
	}
}

TEST_CASE("synthetic chicken and tomato hit the published statistics") {
	struct Target {
		const char* name;
		double mean, min, max, sd;
	};
	for (const auto& t : {Target{"chicken", 4.84, 3.50, 6.25, 0.52}, Target{"chili", 5.92, 2.90, 12.0, 1.55},
	                      Target{"tomato", 2.19, 0.50, 6.35, 0.83}}) {
		CAPTURE(t.name);
		const auto spec = *preset(t.name);
		CHECK(spec.n_weeks == 588);
		const auto s = price_stats(generate_synthetic(spec));
		CHECK(std::abs(s.mean - t.mean) <= 0.05 * t.mean);
		CHECK(std::abs(s.sd - t.sd) <= 0.15 * t.sd);
		CHECK(s.min >= t.min);
		CHECK(s.max <= t.max);
	}
}

TEST_CASE("synthetic missing injection is exact") {
	SyntheticSpec spec = *preset("chicken");
	spec.n_weeks = 500;
	CHECK(generate_synthetic(spec).base().missing_count() == 10);
	spec.n_weeks = 588;
	CHECK(generate_synthetic(spec).base().missing_count() == 11);
}

TEST_CASE("synthetic generator is seed deterministic") {
	auto spec = *preset("chili");
	const auto a = generate_synthetic(spec);
	CHECK(a == generate_synthetic(spec));
	spec.seed = 28;
	CHECK_FALSE(a == generate_synthetic(spec));
	CHECK(a.column_count() == 5);
}

TEST_CASE("synthetic spec validation") {
	SyntheticSpec bad = *preset("chicken");
	bad.stddev = 0.0;
	CHECK(code_of([&] { generate_synthetic(bad); }) == ErrorCode::InvalidSpec);
	bad = *preset("chicken");
	bad.mean = 7.0;
	CHECK(code_of([&] { generate_synthetic(bad); }) == ErrorCode::InvalidSpec);
	bad = *preset("chicken");
	bad.missing_rate = 0.1;
	CHECK(code_of([&] { generate_synthetic(bad); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("synthetic price depends on crude oil") {
	const auto f = testing::synthetic("chicken", 588);
	const auto oil = *f.find_column(core::kCrudeOil);
	std::vector<double> p, o;
	for (std::size_t i = 0; i < f.rows(); ++i) {
		if (f.cells(0)[i] && f.cells(oil)[i]) {
			p.push_back(*f.cells(0)[i]);
			o.push_back(*f.cells(oil)[i]);
		}
	}
	const double mp = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
	const double mo = std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(o.size());
	double sxy = 0, sxx = 0, syy = 0;
	for (std::size_t i = 0; i < p.size(); ++i) {
		sxy += (p[i] - mp) * (o[i] - mo);
		sxx += (o[i] - mo) * (o[i] - mo);
		syy += (p[i] - mp) * (p[i] - mp);
	}
	CHECK(sxy / std::sqrt(sxx * syy) > 0.1);
}

TEST_CASE("property: load of written csv is bit exact") {
	for (const auto& spec : presets()) {
		auto s = spec;
		s.n_weeks = 120;
		const auto frame = generate_synthetic(s);
		std::istringstream in(to_csv(s.commodity, frame));
		const auto back = load_csv(in, s.commodity);
		CHECK(back.frame == frame);
		CHECK(back.warnings.empty());
	}
}

TEST_CASE("presets cover at least seven commodities") {
	CHECK(presets().size() >= 7);
	CHECK_FALSE(preset("durian").has_value());
}
