// agri: operator entry point for ingest, synthetic data, benchmarks,
// forecasts and the HTTP service.

#include "agri/engine/engine.hpp"
#include "agri/error.hpp"
#include "agri/ingest/ingest.hpp"
#include "agri/service/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <charconv>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

using namespace agri;

namespace {

/// Shortest decimal that reads back to the same double.
std::string shortest(double value) {
	char buffer[64];
	const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
	return {buffer, ptr};
}

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

int exit_code_for(ErrorCode code) {
	switch (code) {
	case ErrorCode::InvalidSpec:
	case ErrorCode::InvalidArgument:
		return kExitUsage;
	case ErrorCode::TooShort:
	case ErrorCode::ConstantColumn:
	case ErrorCode::UnknownColumn:
	case ErrorCode::LengthMismatch:
	case ErrorCode::Empty:
	case ErrorCode::MissingValue:
	case ErrorCode::ParseError:
	case ErrorCode::UnknownCommodity:
	case ErrorCode::EmptyFile:
	case ErrorCode::AllMissingColumn:
	case ErrorCode::EmptyData:
	case ErrorCode::IoError:
		return kExitData;
	default:
		return kExitModel;
	}
}

std::string quote(std::string_view text) {
	std::string out = "\"";
	for (const char c : text) {
		switch (c) {
		case '"':
			out += "\\\"";
			break;
		case '\\':
			out += "\\\\";
			break;
		case '\n':
			out += "\\n";
			break;
		default:
			out += c;
		}
	}
	return out + "\"";
}

int report_error(std::string_view code, std::string_view message, int status) {
	if (message.starts_with(code) && message.substr(code.size()).starts_with(": ")) {
		message.remove_prefix(code.size() + 2);
	}
	std::cerr << "error: code=" << code << " message=" << quote(message) << '\n';
	return status;
}

struct Global {
	std::string data_dir = "data";
	std::uint64_t seed = 27;
	std::string policy = "ffill";
	double train_fraction = 0.9;
	bool quick = false;
	bool no_tune = false;
	bool verbose = false;

	engine::Options options() const {
		engine::Options o;
		o.seed = seed;
		o.policy.strategy = ingest::parse_strategy(policy);
		o.split.train_fraction = train_fraction;
		o.split.validate();
		o.tune = !no_tune;
		o.quick = quick;
		return o;
	}

	std::filesystem::path db_path() const {
		std::filesystem::create_directories(data_dir);
		return std::filesystem::path(data_dir) / "agri.db";
	}
};

core::FeatureFrame load_commodity(service::Store& store, const std::string& commodity) {
	auto frame = store.get_series(commodity);
	if (!frame) {
		throw Error(ErrorCode::UnknownCommodity, "no data for commodity '" + commodity + "'; run ingest first");
	}
	return *frame;
}

int cmd_ingest(const Global& g, const std::vector<std::string>& files) {
	service::Store store(g.db_path().string());
	std::size_t loaded = 0;
	std::string last_error;
	for (const auto& file : files) {
		try {
			for (const auto& [commodity, result] : ingest::load_csv_all(file)) {
				for (const auto& w : result.warnings) {
					std::cerr << "warning: " << file << ": " << commodity << ": " << w << '\n';
				}
				store.put_series(commodity, result.frame);
				const auto missing = result.frame.base().missing_count();
				const auto rows = result.frame.rows();
				std::printf("%s: %s rows=%zu missing=%zu (%.2f%%) columns=%zu\n", file.c_str(), commodity.c_str(), rows,
				            missing, rows ? 100.0 * static_cast<double>(missing) / static_cast<double>(rows) : 0.0,
				            result.frame.column_count());
				++loaded;
			}
		} catch (const Error& e) {
			report_error(to_string(e.code()), file + ": " + e.what(), kExitData);
			last_error = e.what();
		}
	}
	if (loaded == 0) {
		return kExitData;
	}
	return kExitOk;
}

struct SynthArgs {
	std::string commodity = "chicken";
	bool all = false;
	std::optional<double> mean, min, max, stddev;
	double missing_rate = 0.02;
	std::size_t weeks = 588;
	std::string out;
	bool ingest = false;
};

int cmd_synth(const Global& g, const SynthArgs& a) {
	std::vector<ingest::SyntheticSpec> specs;
	if (a.all) {
		specs = ingest::presets();
	} else {
		auto spec = ingest::preset(a.commodity).value_or(ingest::SyntheticSpec{a.commodity});
		if (a.mean) spec.mean = *a.mean;
		if (a.min) spec.min = *a.min;
		if (a.max) spec.max = *a.max;
		if (a.stddev) spec.stddev = *a.stddev;
		specs.push_back(spec);
	}
	std::ostringstream csv;
	bool header = true;
	std::vector<std::pair<std::string, core::FeatureFrame>> frames;
	for (auto spec : specs) {
		spec.seed = g.seed;
		spec.n_weeks = a.weeks;
		spec.missing_rate = a.missing_rate;
		auto frame = ingest::generate_synthetic(spec);
		ingest::write_csv(csv, spec.commodity, frame, header);
		header = false;
		frames.emplace_back(spec.commodity, std::move(frame));
	}
	if (a.out.empty() || a.out == "-") {
		std::cout << csv.str();
	} else {
		std::ofstream out(a.out, std::ios::binary);
		out << csv.str();
		if (!out) {
			throw Error(ErrorCode::IoError, "cannot write " + a.out);
		}
		std::cerr << "wrote " << frames.size() << " commodities x " << a.weeks << " weeks to " << a.out << '\n';
	}
	if (a.ingest) {
		service::Store store(g.db_path().string());
		for (const auto& [name, frame] : frames) {
			store.put_series(name, frame);
		}
	}
	return kExitOk;
}

int cmd_benchmark(const Global& g, int series, std::vector<std::string> commodities, const std::string& out_path) {
	const auto options = g.options();
	service::Store store(g.db_path().string());
	if (commodities.empty()) {
		for (const auto& name : {"chicken", "chili", "tomato"}) {
			if (store.get_series(name)) {
				commodities.emplace_back(name);
			}
		}
	}
	if (commodities.empty()) {
		throw Error(ErrorCode::EmptyData, "no commodities to benchmark; ingest data first");
	}
	std::vector<engine::Dataset> datasets;
	for (const auto& c : commodities) {
		auto frame = load_commodity(store, c);
		if (series == 2) {
			engine::select_columns(frame, engine::Mode::Multivariate);
		} else {
			frame = frame.price_only();
		}
		datasets.push_back({c, std::move(frame)});
	}
	std::vector<engine::Mode> modes{engine::Mode::Univariate};
	if (series == 2) {
		modes.push_back(engine::Mode::Multivariate);
	}
	std::vector<engine::EvaluationReport> reports;
	for (const auto& d : datasets) {
		if (g.verbose) {
			std::cerr << "evaluating " << d.commodity << '\n';
		}
		reports.push_back(engine::evaluate_commodity(d, modes, options));
	}
	std::ostringstream csv;
	engine::write_report_csv(csv, reports);
	const std::string path =
	    out_path.empty() ? (std::filesystem::path(g.data_dir) / ("report-series" + std::to_string(series) + ".csv")).string()
	                     : out_path;
	if (path == "-") {
		std::cout << csv.str();
	} else {
		std::ofstream out(path, std::ios::binary);
		out << csv.str();
		if (!out) {
			throw Error(ErrorCode::IoError, "cannot write " + path);
		}
	}
	std::printf("series %d  seed=%llu  policy=%s  train_fraction=%g  tune=%s\n", series,
	            static_cast<unsigned long long>(g.seed), g.policy.c_str(), g.train_fraction, g.no_tune ? "off" : "on");
	std::cout << engine::render_table(reports);
	if (path != "-") {
		std::cout << "report: " << path << '\n';
	}
	return kExitOk;
}

int cmd_forecast(const Global& g, const std::string& commodity, const std::string& mode_text, std::size_t horizon,
                 const std::string& out_path) {
	if (horizon < 1) {
		throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
	}
	const auto options = g.options();
	const auto mode = engine::parse_mode(mode_text);
	service::Store store(g.db_path().string());
	const auto frame = load_commodity(store, commodity);
	const auto final = engine::train_final({commodity, frame}, mode, options, horizon);

	std::ostringstream out;
	out << "date,price_myr,is_forecast\n";
	const auto& prices = frame.cells(0);
	for (std::size_t i = 0; i < frame.rows(); ++i) {
		out << core::format_date(frame.timestamps()[i]) << ',';
		if (prices[i]) {
			out << shortest(*prices[i]);
		}
		out << ",0\n";
	}
	const auto last = frame.timestamps().back();
	for (std::size_t k = 0; k < final.forecast.size(); ++k) {
		out << core::format_date(last + std::chrono::days(core::kDaysPerWeek * static_cast<int>(k + 1))) << ','
		    << shortest(final.forecast[k]) << ",1\n";
	}
	if (out_path.empty() || out_path == "-") {
		std::cout << out.str();
	} else {
		std::ofstream file(out_path, std::ios::binary);
		file << out.str();
		if (!file) {
			throw Error(ErrorCode::IoError, "cannot write " + out_path);
		}
	}
	std::cerr << "model: " << final.report.winner->label() << '\n';
	return kExitOk;
}

int cmd_serve(const Global& g, const std::string& bind) {
	service::Config base;
	base.data_dir = g.data_dir;
	base.engine = g.options();
	auto config = service::Config::from_env(base);
	if (!bind.empty()) {
		const auto colon = bind.rfind(':');
		if (colon == std::string::npos) {
			throw Error(ErrorCode::InvalidArgument, "--bind must be host:port");
		}
		config.host = bind.substr(0, colon);
		config.port = std::stoi(bind.substr(colon + 1));
	}
	sigset_t signals;
	sigemptyset(&signals);
	sigaddset(&signals, SIGINT);
	sigaddset(&signals, SIGTERM);
	pthread_sigmask(SIG_BLOCK, &signals, nullptr);

	service::Service svc(config);
	const int port = svc.start(config.host, config.port);
	std::cerr << "listening on " << config.host << ':' << port << '\n';
	int sig = 0;
	sigwait(&signals, &sig);
	std::cerr << "shutting down\n";
	svc.stop();
	return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Agricultural commodity price forecasting"};
	app.require_subcommand(1);
	Global g;
	app.add_option("--data-dir", g.data_dir, "Data directory (database, artifacts, reports)");
	app.add_option("--seed", g.seed, "Seed for every random choice");
	app.add_option("--policy", g.policy, "Missing-value policy")->check(CLI::IsMember({"sentinel", "drop", "ffill"}));
	app.add_option("--train-fraction", g.train_fraction, "Holdout training share")->check(CLI::Range(0.0, 1.0));
	app.add_flag("--quick", g.quick, "Small training budgets (smoke runs)");
	app.add_flag("--no-tune", g.no_tune, "Skip the hyperparameter grid search");
	app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

	std::vector<std::string> files;
	auto* ingest_cmd = app.add_subcommand("ingest", "Load price CSV files into the store");
	ingest_cmd->add_option("files", files, "CSV files")->required()->check(CLI::ExistingFile);

	SynthArgs synth;
	auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic weekly price data");
	synth_cmd->add_option("--commodity", synth.commodity, "Preset or new commodity name");
	synth_cmd->add_flag("--all", synth.all, "Every built-in preset");
	synth_cmd->add_option("--mean", synth.mean);
	synth_cmd->add_option("--min", synth.min);
	synth_cmd->add_option("--max", synth.max);
	synth_cmd->add_option("--stddev", synth.stddev);
	synth_cmd->add_option("--missing-rate", synth.missing_rate);
	synth_cmd->add_option("--weeks", synth.weeks);
	synth_cmd->add_option("-o,--out", synth.out, "Output CSV (default stdout)");
	synth_cmd->add_flag("--ingest", synth.ingest, "Also load the result into the store");

	int series = 1;
	std::vector<std::string> bench_commodities;
	std::string bench_out;
	auto* bench_cmd = app.add_subcommand("benchmark", "Run experiment series 1 (univariate) or 2 (+multivariate)");
	bench_cmd->add_option("--series", series)->check(CLI::IsMember({1, 2}));
	bench_cmd->add_option("--commodity", bench_commodities, "Commodities (default chicken, chili, tomato)");
	bench_cmd->add_option("-o,--out", bench_out, "Report CSV path");

	std::string fc_commodity;
	std::string fc_mode = "uni";
	std::size_t fc_horizon = 52;
	std::string fc_out;
	auto* fc_cmd = app.add_subcommand("forecast", "Train, select and write a history+forecast CSV");
	fc_cmd->add_option("--commodity", fc_commodity)->required();
	fc_cmd->add_option("--mode", fc_mode)->check(CLI::IsMember({"uni", "multi", "univariate", "multivariate"}));
	fc_cmd->add_option("--horizon", fc_horizon);
	fc_cmd->add_option("-o,--out", fc_out, "Output CSV (default stdout)");

	std::string bind;
	auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API until SIGINT/SIGTERM");
	serve_cmd->add_option("--bind", bind, "host:port (default from AGRI_BIND or 127.0.0.1:8080)");

	try {
		app.parse(argc, argv);
	} catch (const CLI::CallForHelp& e) {
		return app.exit(e);
	} catch (const CLI::CallForAllHelp& e) {
		return app.exit(e);
	} catch (const CLI::ParseError& e) {
		return report_error("Usage", e.what(), kExitUsage);
	}

	try {
		if (*ingest_cmd) {
			return cmd_ingest(g, files);
		}
		if (*synth_cmd) {
			return cmd_synth(g, synth);
		}
		if (*bench_cmd) {
			return cmd_benchmark(g, series, bench_commodities, bench_out);
		}
		if (*fc_cmd) {
			return cmd_forecast(g, fc_commodity, fc_mode, fc_horizon, fc_out);
		}
		if (*serve_cmd) {
			return cmd_serve(g, bind);
		}
	} catch (const Error& e) {
		return report_error(to_string(e.code()), e.what(), exit_code_for(e.code()));
	} catch (const std::exception& e) {
		return report_error("Internal", e.what(), kExitData);
	}
	return kExitUsage;
}
