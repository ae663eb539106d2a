#include "agri/engine/artifact.hpp"
#include "agri/engine/engine.hpp"
#include "agri/error.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace agri;
using namespace agri::engine;

namespace {

Options quick() {
	Options o;
	o.tune = false;
	o.quick = true;
	return o;
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

std::filesystem::path temp_dir(const std::string& name) {
	auto dir = std::filesystem::temp_directory_path() / ("agri-test-" + name + "-" + std::to_string(::getpid()));
	std::filesystem::remove_all(dir);
	std::filesystem::create_directories(dir);
	return dir;
}

std::vector<Scored> scored(std::initializer_list<std::pair<Family, double>> items) {
	std::vector<Scored> out;
	for (const auto& [f, m] : items) out.push_back({default_spec(f, Mode::Univariate), m});
	return out;
}

} // namespace

TEST_CASE("spec validation") {
	CHECK(code_of([] { default_spec(Family::Arima, Mode::Multivariate).validate(); }) == ErrorCode::InvalidSpec);
	ModelSpec mismatched{Family::Svr, Mode::Univariate, gbt::Params{}};
	CHECK(code_of([&] { mismatched.validate(); }) == ErrorCode::InvalidSpec);
	for (const auto f : all_families()) {
		default_spec(f, Mode::Univariate).validate();
		CHECK(parse_family(to_string(f)) == f);
	}
	CHECK(parse_mode("multi") == Mode::Multivariate);
	CHECK(parse_mode("univariate") == Mode::Univariate);
	CHECK(code_of([] { parse_mode("both"); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("preprocess removes missing prices") {
	const auto frame = testing::synthetic("chicken", 588, 27, 0.02);
	CHECK(frame.base().missing_count() == 11);
	CHECK(preprocess(frame, {}).missing_count() == 0);
	const auto clean = testing::synthetic("chicken", 200);
	CHECK(preprocess(clean, {}) == clean);
	const auto hole = clean.with_cells(1, std::vector<core::Cell>(clean.rows()));
	try {
		preprocess(hole, {});
		FAIL("expected AllMissingColumn");
	} catch (const Error& e) {
		CHECK(e.code() == ErrorCode::AllMissingColumn);
		CHECK(std::string(e.what()).find(core::kTemperature) != std::string::npos);
	}
}

TEST_CASE("multivariate column selection lists absent columns") {
	const auto frame = testing::synthetic("chicken", 120).price_only();
	try {
		select_columns(frame, Mode::Multivariate);
		FAIL("expected UnknownColumn");
	} catch (const Error& e) {
		CHECK(e.code() == ErrorCode::UnknownColumn);
		CHECK(std::string(e.what()).find(core::kCrudeOil) != std::string::npos);
	}
	CHECK(select_columns(testing::synthetic("chicken", 120), Mode::Multivariate).column_count() == 5);
	CHECK(select_columns(testing::synthetic("chicken", 120), Mode::Univariate).column_count() == 1);
}

TEST_CASE("ARIMA grid includes the (1,1,1) and (2,1,1) readings") {
	const auto frame = testing::synthetic("chicken", 300);
	const auto grid = candidates(Family::Arima, Mode::Univariate, frame, {});
	auto has = [&](arima::Order o) {
		return std::any_of(grid.begin(), grid.end(), [&](const ModelSpec& s) { return std::get<arima::Order>(s.hyper) == o; });
	};
	CHECK(has({1, 1, 1}));
	CHECK(has({2, 1, 1}));
	CHECK(candidates(Family::Svr, Mode::Univariate, frame, {}).size() == 4);
	CHECK(candidates(Family::Trend, Mode::Univariate, frame, {}).size() == 5);
	CHECK(candidates(Family::Lstm, Mode::Multivariate, frame, {}).size() == 3);
}

TEST_CASE("tune picks the first of equal candidates and the only one of one") {
	const auto frame = preprocess(testing::synthetic("tomato", 300), {});
	const auto spec = default_spec(Family::Trend, Mode::Univariate);
	const auto single = tune({spec}, frame, {});
	CHECK(single.best.label() == spec.label());
	auto twin = spec;
	std::get<trend::Params>(twin.hyper).changepoint_range = 0.8; // same value, distinct object
	const auto tied = tune({spec, twin}, frame, {});
	CHECK(tied.scores[0].second == tied.scores[1].second);
	CHECK(&tied.best != &tied.scores[1].first);
	CHECK(tied.best.label() == tied.scores[0].first.label());
	auto bad = default_spec(Family::Arima, Mode::Univariate);
	bad.hyper = arima::Order{5, 2, 5};
	CHECK(code_of([&] { tune({bad}, frame.slice(0, 120), {}); }) == ErrorCode::GridExhausted);
}

TEST_CASE("train_and_test yields finite MSE in price units for every family") {
	const auto frame = testing::synthetic("chicken", 260, 27, 0.02);
	for (const auto f : all_families()) {
		CAPTURE(to_string(f));
		const auto spec = default_spec(f, Mode::Univariate, quick());
		const auto r = train_and_test(spec, frame, quick());
		CHECK(std::isfinite(r.mse));
		CHECK(r.mse >= 0.0);
		CHECK(r.mse < 10.0);
		CHECK(r.train_rows == 234);
		CHECK(r.test_rows == 26);
		CHECK(r.forecast.size() == 26);
		const auto again = train_and_test(spec, frame, quick());
		CHECK(again.mse == r.mse);
	}
}

TEST_CASE("property: evaluation never reads test-partition values") {
	const auto frame = testing::synthetic("chili", 260);
	const auto split = core::holdout_split(frame, {});
	std::vector<core::Cell> poisoned = frame.cells(0);
	for (std::size_t i = split.train.rows(); i < poisoned.size(); ++i) poisoned[i] = 1000.0;
	const auto altered = frame.with_cells(0, poisoned);
	for (const auto f : all_families()) {
		for (const auto mode : {Mode::Univariate, Mode::Multivariate}) {
			if (f == Family::Arima && mode == Mode::Multivariate) continue;
			const auto spec = default_spec(f, mode, quick());
			CHECK(train_and_test(spec, frame, quick()).forecast == train_and_test(spec, altered, quick()).forecast);
		}
	}
}

TEST_CASE("select_best examples") {
	CHECK(select_best(scored({{Family::Arima, 0.251}, {Family::Lstm, 0.556}})).family == Family::Arima);
	CHECK(select_best(scored({{Family::Lstm, 0.304}, {Family::Arima, 0.437}})).family == Family::Lstm);
	CHECK(select_best(scored({{Family::Gbt, 0.9}})).family == Family::Gbt);
	CHECK(select_best(scored({{Family::Lstm, 0.3}, {Family::Svr, 0.3 + 1e-13}})).family == Family::Svr);
	CHECK(select_best(std::map<Family, double>{{Family::Trend, 0.2}, {Family::Gbt, 0.1}}) == Family::Gbt);
	CHECK(code_of([] { select_best(std::span<const Scored>{}); }) == ErrorCode::EmptyReport);
}

TEST_CASE("property: select_best is invariant to positive scaling") {
	core::CounterRng rng(27, 50);
	for (int trial = 0; trial < 200; ++trial) {
		std::vector<Scored> s;
		for (const auto f : all_families()) s.push_back({default_spec(f, Mode::Univariate), 0.01 + rng.uniform()});
		const auto before = select_best(s).family;
		const double k = std::exp(rng.uniform(-5.0, 5.0));
		for (auto& x : s) x.mse *= k;
		CHECK(select_best(s).family == before);
	}
}

TEST_CASE("series-1 experiment shape and report output") {
	std::vector<Dataset> data;
	for (const char* c : {"chicken", "chili", "tomato"}) data.push_back({c, testing::synthetic(c, 260).price_only()});
	const auto reports = run_experiment(data, {Mode::Univariate}, quick());
	REQUIRE(reports.size() == 3);
	std::size_t cells = 0;
	for (const auto& r : reports) {
		cells += r.cells.size();
		CHECK(r.winner.has_value());
		for (const auto& c : r.cells) CHECK(c.result.has_value());
	}
	CHECK(cells == 15);
	std::ostringstream csv;
	write_report_csv(csv, reports);
	std::string line;
	std::istringstream in(csv.str());
	std::getline(in, line);
	CHECK(line == kReportHeader);
	std::size_t rows = 0;
	while (std::getline(in, line)) ++rows;
	CHECK(rows == 15);
	CHECK(render_table(reports).find('*') != std::string::npos);
	CHECK(run_experiment({}, {Mode::Univariate}, quick()).empty());
}

TEST_CASE("series-2 adds multivariate cells over the four exogenous features") {
	const auto frame = testing::synthetic("chicken", 260);
	CHECK(frame.exogenous().size() == 4);
	const auto r = evaluate_commodity({"chicken", frame}, {Mode::Univariate, Mode::Multivariate}, quick());
	std::size_t multi = 0;
	for (const auto& c : r.cells) {
		if (c.mode == Mode::Multivariate) {
			++multi;
			CHECK(c.family != Family::Arima);
		}
	}
	CHECK(r.cells.size() == 9);
	CHECK(multi == 4);
}

TEST_CASE("failed cells are recorded and the run continues") {
	const auto frame = testing::synthetic("chicken", 60);
	const auto r = evaluate_commodity({"chicken", frame}, {Mode::Univariate}, quick());
	CHECK(r.cells.size() == 5);
	bool any_error = false;
	for (const auto& c : r.cells) any_error = any_error || !c.error.empty();
	CHECK(any_error);
	std::ostringstream csv;
	write_report_csv(csv, {r});
	CHECK(csv.str().find("error: ") != std::string::npos);
}

TEST_CASE("sentinel policy attaches an SVR warning") {
	auto o = quick();
	o.policy.strategy = ingest::MissingStrategy::SentinelFill;
	const auto r = train_and_test(default_spec(Family::Svr, Mode::Univariate, o), testing::synthetic("chicken", 200, 27, 0.02), o);
	CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("property: artifacts round trip probe forecasts bit-exactly for all families") {
	const auto dir = temp_dir("artifacts");
	const ArtifactStore store(dir);
	const auto frame = preprocess(testing::synthetic("chili", 260), {});
	for (const auto f : all_families()) {
		for (const auto mode : {Mode::Univariate, Mode::Multivariate}) {
			if (f == Family::Arima && mode == Mode::Multivariate) continue;
			CAPTURE(to_string(f));
			CAPTURE(to_string(mode));
			const auto spec = default_spec(f, mode, quick());
			std::shared_ptr<const TrainedModel> model = fit(spec, frame);
			Artifact a{"chili", fingerprint("chili", frame), model, "2026-01-01T00:00:00Z", {}};
			const auto id = store.save(a);
			const auto loaded = store.load(id);
			CHECK(loaded.content_hash == id);
			CHECK(loaded.fingerprint == a.fingerprint);
			CHECK(loaded.model->spec().label() == spec.label());
			CHECK(loaded.model->forecast(frame, 20) == model->forecast(frame, 20));
			CHECK(deserialize(serialize(a)).model->forecast(frame, 7) == model->forecast(frame, 7));
		}
	}
	std::filesystem::remove_all(dir);
}

TEST_CASE("tampered and foreign-version artifacts are rejected") {
	const auto frame = preprocess(testing::synthetic("tomato", 200), {});
	std::shared_ptr<const TrainedModel> model = fit(default_spec(Family::Trend, Mode::Univariate), frame);
	const Artifact a{"tomato", fingerprint("tomato", frame), model, "2026-01-01T00:00:00Z", {}};
	auto doc = to_document(a);
	auto tampered = doc;
	tampered["model"]["coefficients"][0] = 99.0;
	CHECK(code_of([&] { from_document(tampered); }) == ErrorCode::CorruptArtifact);
	auto future = doc;
	future["version"] = kArtifactVersion + 1;
	CHECK(code_of([&] { from_document(future); }) == ErrorCode::VersionMismatch);
	CHECK(code_of([] { deserialize("{not json"); }) == ErrorCode::CorruptArtifact);

	const auto dir = temp_dir("tamper");
	const ArtifactStore store(dir);
	const auto id = store.save(a);
	std::ofstream(store.path_of(id)) << tampered.dump();
	CHECK(code_of([&] { store.load(id); }) == ErrorCode::CorruptArtifact);
	CHECK(code_of([&] { store.load("0000"); }) == ErrorCode::IoError);
	std::filesystem::remove_all(dir);
}

TEST_CASE("fingerprints follow the data") {
	const auto frame = testing::synthetic("chicken", 120);
	CHECK(fingerprint("chicken", frame) == fingerprint("chicken", frame));
	CHECK(fingerprint("chicken", frame) != fingerprint("chicken", frame.slice(0, 119)));
	CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("train_final refits the winner and forecasts past the data") {
	const auto frame = testing::synthetic("chicken", 260, 27, 0.02);
	const auto final = train_final({"chicken", frame}, Mode::Univariate, quick(), 52);
	CHECK(final.forecast.size() == 52);
	CHECK(final.history.rows() == frame.rows());
	CHECK(final.model->spec().family == final.report.winner->family);
}
