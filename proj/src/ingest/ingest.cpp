#include "agri/ingest/ingest.hpp"

#include "agri/core/random.hpp"
#include "agri/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace agri::ingest {

using core::Cell;
using core::Date;
using core::FeatureFrame;

namespace {

constexpr std::array<std::string_view, 7> kFieldNames{
    "date", "commodity", "price_myr", "temperature_c", "humidity_pct", "precipitation_mm", "crude_oil_usd"};

std::vector<std::string_view> split_fields(std::string_view line) {
	std::vector<std::string_view> fields;
	std::size_t start = 0;
	while (true) {
		const auto comma = line.find(',', start);
		if (comma == std::string_view::npos) {
			fields.push_back(line.substr(start));
			return fields;
		}
		fields.push_back(line.substr(start, comma - start));
		start = comma + 1;
	}
}

std::string location(std::size_t line, std::string_view column) {
	return "line " + std::to_string(line) + ", column '" + std::string(column) + "'";
}

std::optional<double> parse_number(std::string_view text, std::size_t line, std::string_view column) {
	if (text.empty()) {
		return std::nullopt;
	}
	double value = 0.0;
	auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
	if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
		throw Error(ErrorCode::ParseError, location(line, column) + ": invalid number '" + std::string(text) + "'");
	}
	return value;
}

void append_number(std::string& out, const Cell& cell) {
	if (!cell) {
		return;
	}
	char buffer[64];
	auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, *cell);
	out.append(buffer, ptr);
}

} // namespace

std::vector<RawRecord> read_records(std::istream& in) {
	std::string line;
	if (!std::getline(in, line)) {
		throw Error(ErrorCode::EmptyFile, "no header row");
	}
	if (!line.empty() && line.back() == '\r') {
		line.pop_back();
	}
	if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
		line.erase(0, 3);
	}
	if (line != kCsvHeader) {
		throw Error(ErrorCode::ParseError, "line 1: header must be '" + std::string(kCsvHeader) + "'");
	}
	std::vector<RawRecord> records;
	std::size_t line_number = 1;
	while (std::getline(in, line)) {
		++line_number;
		if (!line.empty() && line.back() == '\r') {
			line.pop_back();
		}
		if (line.empty()) {
			continue;
		}
		const auto fields = split_fields(line);
		if (fields.size() != kFieldNames.size()) {
			throw Error(ErrorCode::ParseError, "line " + std::to_string(line_number) + ": expected 7 fields, got " +
			                                       std::to_string(fields.size()));
		}
		RawRecord record;
		try {
			record.date = core::parse_date(fields[0]);
		} catch (const Error&) {
			throw Error(ErrorCode::ParseError,
			            location(line_number, kFieldNames[0]) + ": invalid date '" + std::string(fields[0]) + "'");
		}
		if (fields[1].empty()) {
			throw Error(ErrorCode::ParseError, location(line_number, kFieldNames[1]) + ": empty commodity");
		}
		record.commodity = std::string(fields[1]);
		record.price = parse_number(fields[2], line_number, kFieldNames[2]);
		if (record.price && *record.price <= 0.0) {
			throw Error(ErrorCode::ParseError, location(line_number, kFieldNames[2]) + ": price must be positive");
		}
		record.temperature = parse_number(fields[3], line_number, kFieldNames[3]);
		record.humidity = parse_number(fields[4], line_number, kFieldNames[4]);
		record.precipitation = parse_number(fields[5], line_number, kFieldNames[5]);
		record.crude_oil = parse_number(fields[6], line_number, kFieldNames[6]);
		records.push_back(std::move(record));
	}
	if (records.empty()) {
		throw Error(ErrorCode::EmptyFile, "no data rows");
	}
	return records;
}

LoadResult assemble(const std::vector<RawRecord>& records, std::string_view commodity) {
	std::vector<const RawRecord*> rows;
	for (const auto& r : records) {
		if (r.commodity == commodity) {
			rows.push_back(&r);
		}
	}
	if (rows.empty()) {
		throw Error(ErrorCode::UnknownCommodity, "no rows for commodity '" + std::string(commodity) + "'");
	}
	LoadResult result;
	std::stable_sort(rows.begin(), rows.end(), [](const RawRecord* a, const RawRecord* b) {
		return core::week_monday(a->date) < core::week_monday(b->date);
	});
	std::vector<std::pair<Date, const RawRecord*>> unique;
	for (const auto* r : rows) {
		const auto week = core::week_monday(r->date);
		if (!unique.empty() && unique.back().first == week) {
			result.warnings.push_back("duplicate week " + core::format_date(week) + " for '" + std::string(commodity) +
			                          "'; keeping the first row");
			continue;
		}
		unique.emplace_back(week, r);
	}

	const Date first = unique.front().first;
	const Date last = unique.back().first;
	const auto weeks = static_cast<std::size_t>((last - first).count() / core::kDaysPerWeek) + 1;
	std::vector<Date> timestamps(weeks);
	for (std::size_t i = 0; i < weeks; ++i) {
		timestamps[i] = first + std::chrono::days{static_cast<long>(i) * core::kDaysPerWeek};
	}
	std::array<std::vector<Cell>, 5> columns;
	for (auto& c : columns) {
		c.assign(weeks, std::nullopt);
	}
	for (const auto& [week, r] : unique) {
		const auto i = static_cast<std::size_t>((week - first).count() / core::kDaysPerWeek);
		columns[0][i] = r->price;
		columns[1][i] = r->temperature;
		columns[2][i] = r->humidity;
		columns[3][i] = r->precipitation;
		columns[4][i] = r->crude_oil;
	}
	if (weeks > unique.size()) {
		result.warnings.push_back(std::to_string(weeks - unique.size()) + " missing week(s) inserted for '" +
		                          std::string(commodity) + "'");
	}
	std::vector<core::Column> exogenous;
	for (std::size_t c = 1; c < columns.size(); ++c) {
		const bool observed = std::any_of(columns[c].begin(), columns[c].end(), [](const Cell& x) { return x.has_value(); });
		if (observed) {
			exogenous.push_back({core::exogenous_names()[c - 1], std::move(columns[c])});
		}
	}
	result.frame = FeatureFrame(core::Series(std::move(timestamps), std::move(columns[0])), std::move(exogenous));
	return result;
}

LoadResult load_csv(std::istream& in, std::string_view commodity) {
	return assemble(read_records(in), commodity);
}

LoadResult load_csv(const std::filesystem::path& path, std::string_view commodity) {
	std::ifstream in(path);
	if (!in) {
		throw Error(ErrorCode::IoError, "cannot open " + path.string());
	}
	return load_csv(in, commodity);
}

std::map<std::string, LoadResult> load_csv_all(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in) {
		throw Error(ErrorCode::IoError, "cannot open " + path.string());
	}
	const auto records = read_records(in);
	std::map<std::string, LoadResult> out;
	for (const auto& r : records) {
		if (!out.contains(r.commodity)) {
			out.emplace(r.commodity, assemble(records, r.commodity));
		}
	}
	return out;
}

void write_csv(std::ostream& out, std::string_view commodity, const FeatureFrame& frame, bool with_header) {
	if (with_header) {
		out << kCsvHeader << '\n';
	}
	std::array<const std::vector<Cell>*, 4> exogenous{};
	for (std::size_t k = 0; k < exogenous.size(); ++k) {
		if (const auto index = frame.find_column(core::exogenous_names()[k])) {
			exogenous[k] = &frame.cells(*index);
		}
	}
	std::string line;
	for (std::size_t i = 0; i < frame.rows(); ++i) {
		line = core::format_date(frame.timestamps()[i]);
		line += ',';
		line += commodity;
		line += ',';
		append_number(line, frame.base().values()[i]);
		for (const auto* column : exogenous) {
			line += ',';
			if (column) {
				append_number(line, (*column)[i]);
			}
		}
		line += '\n';
		out << line;
	}
}

std::string to_csv(std::string_view commodity, const FeatureFrame& frame) {
	std::ostringstream out;
	write_csv(out, commodity, frame);
	return out.str();
}

std::string_view to_string(MissingStrategy strategy) {
	switch (strategy) {
	case MissingStrategy::SentinelFill: return "sentinel";
	case MissingStrategy::DropRows: return "drop";
	case MissingStrategy::ForwardFill: return "ffill";
	}
	return "unknown";
}

MissingStrategy parse_strategy(std::string_view text) {
	if (text == "sentinel") {
		return MissingStrategy::SentinelFill;
	}
	if (text == "drop") {
		return MissingStrategy::DropRows;
	}
	if (text == "ffill") {
		return MissingStrategy::ForwardFill;
	}
	throw Error(ErrorCode::InvalidArgument, "unknown missing policy '" + std::string(text) + "'");
}

FeatureFrame apply_missing_policy(const FeatureFrame& frame, MissingPolicy policy) {
	if (policy.strategy == MissingStrategy::SentinelFill) {
		FeatureFrame out = frame;
		for (std::size_t c = 0; c < frame.column_count(); ++c) {
			auto cells = frame.cells(c);
			for (auto& cell : cells) {
				if (!cell) {
					cell = kSentinel;
				}
			}
			out = out.with_cells(c, std::move(cells));
		}
		return out;
	}

	for (std::size_t c = 0; c < frame.column_count(); ++c) {
		const auto& cells = frame.cells(c);
		if (!cells.empty() && std::none_of(cells.begin(), cells.end(), [](const Cell& x) { return x.has_value(); })) {
			throw Error(ErrorCode::AllMissingColumn, "column '" + frame.column_name(c) + "' has no observed value");
		}
	}

	if (policy.strategy == MissingStrategy::DropRows) {
		std::vector<Date> timestamps;
		std::vector<std::vector<Cell>> columns(frame.column_count());
		for (std::size_t i = 0; i < frame.rows(); ++i) {
			bool complete = true;
			for (std::size_t c = 0; c < frame.column_count() && complete; ++c) {
				complete = frame.cells(c)[i].has_value();
			}
			if (!complete) {
				continue;
			}
			timestamps.push_back(frame.timestamps()[i]);
			for (std::size_t c = 0; c < frame.column_count(); ++c) {
				columns[c].push_back(frame.cells(c)[i]);
			}
		}
		std::vector<core::Column> exogenous;
		for (std::size_t c = 1; c < columns.size(); ++c) {
			exogenous.push_back({frame.column_name(c), std::move(columns[c])});
		}
		return FeatureFrame(core::Series(std::move(timestamps), std::move(columns[0])), std::move(exogenous));
	}

	FeatureFrame out = frame;
	for (std::size_t c = 0; c < frame.column_count(); ++c) {
		auto cells = frame.cells(c);
		std::optional<double> last;
		for (auto& cell : cells) {
			if (cell) {
				last = cell;
			} else if (last) {
				cell = last;
			}
		}
		// Leading gap: take the first observed value.
		const auto first = std::find_if(cells.begin(), cells.end(), [](const Cell& x) { return x.has_value(); });
		for (auto it = cells.begin(); it != first; ++it) {
			*it = *first;
		}
		out = out.with_cells(c, std::move(cells));
	}
	return out;
}

void SyntheticSpec::validate() const {
	if (!(min < mean && mean < max)) {
		throw Error(ErrorCode::InvalidSpec, "require min < mean < max");
	}
	if (!(stddev > 0.0)) {
		throw Error(ErrorCode::InvalidSpec, "stddev must be positive");
	}
	if (!(missing_rate >= 0.0 && missing_rate < 0.1)) {
		throw Error(ErrorCode::InvalidSpec, "missing_rate must lie in [0, 0.1)");
	}
	if (n_weeks < 2) {
		throw Error(ErrorCode::InvalidSpec, "need at least 2 weeks");
	}
	if (commodity.empty() || commodity.find(',') != std::string::npos) {
		throw Error(ErrorCode::InvalidSpec, "commodity name must be non-empty and comma-free");
	}
}

const std::vector<SyntheticSpec>& presets() {
	static const std::vector<SyntheticSpec> specs{
	    {"chicken", 4.84, 3.50, 6.25, 0.52},
	    {"chili", 5.92, 2.90, 12.0, 1.55},
	    {"tomato", 2.19, 0.50, 6.35, 0.83},
	    {"cabbage", 2.45, 1.20, 4.20, 0.45},
	    {"onion", 3.10, 2.00, 4.80, 0.50},
	    {"cucumber", 1.95, 0.90, 3.60, 0.40},
	    {"beef", 32.0, 26.0, 38.0, 1.90},
	};
	return specs;
}

std::optional<SyntheticSpec> preset(std::string_view commodity) {
	for (const auto& s : presets()) {
		if (s.commodity == commodity) {
			return s;
		}
	}
	return std::nullopt;
}

namespace {

enum Stream : std::uint64_t { kPriceNoise = 1, kPhase, kTemperature, kHumidity, kPrecipitation, kCrude, kMissing };

void standardize(std::vector<double>& v) {
	const double n = static_cast<double>(v.size());
	const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
	double ss = 0.0;
	for (double x : v) {
		ss += (x - mean) * (x - mean);
	}
	const double sd = std::sqrt(ss / (n - 1.0));
	for (double& x : v) {
		x = sd > 0.0 ? (x - mean) / sd : 0.0;
	}
}

} // namespace

FeatureFrame generate_synthetic(const SyntheticSpec& spec) {
	spec.validate();
	const std::size_t n = spec.n_weeks;
	constexpr double kPeriod = 52.0;
	constexpr double kPhi = 0.7;
	const double two_pi = 2.0 * std::numbers::pi;

	core::CounterRng temp_rng(spec.seed, kTemperature);
	core::CounterRng hum_rng(spec.seed, kHumidity);
	core::CounterRng rain_rng(spec.seed, kPrecipitation);
	core::CounterRng crude_rng(spec.seed, kCrude);
	core::CounterRng noise_rng(spec.seed, kPriceNoise);
	const double phase = core::CounterRng(spec.seed, kPhase).uniform(0.0, two_pi);

	std::vector<double> temperature(n), humidity(n), precipitation(n), crude(n);
	double oil = 70.0;
	for (std::size_t t = 0; t < n; ++t) {
		const double angle = two_pi * static_cast<double>(t) / kPeriod;
		temperature[t] = 27.0 + 1.5 * std::sin(angle + phase + 0.5) + 0.5 * temp_rng.normal();
		humidity[t] = std::clamp(80.0 + 6.0 * std::sin(angle + phase + 2.0) + 2.0 * hum_rng.normal(), 0.0, 100.0);
		precipitation[t] = std::max(0.0, 60.0 + 35.0 * std::sin(angle + phase + 1.0) + 12.0 * rain_rng.normal());
		oil = std::max(10.0, oil + 2.0 * crude_rng.normal());
		crude[t] = oil;
	}

	std::vector<double> crude_z = crude;
	standardize(crude_z);
	std::vector<double> raw(n);
	double noise = 0.0;
	const double innovation_sd = std::sqrt(1.0 - kPhi * kPhi);
	for (std::size_t t = 0; t < n; ++t) {
		noise = kPhi * noise + innovation_sd * noise_rng.normal();
		const double seasonal = std::sin(two_pi * static_cast<double>(t) / kPeriod + phase);
		raw[t] = seasonal + 0.6 * noise + 0.3 * crude_z[t];
	}
	standardize(raw);

	std::vector<Cell> price(n);
	for (std::size_t t = 0; t < n; ++t) {
		price[t] = std::clamp(spec.mean + spec.stddev * raw[t], spec.min, spec.max);
	}

	const auto blanks = static_cast<std::size_t>(std::floor(spec.missing_rate * static_cast<double>(n) + 1e-9));
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	core::CounterRng missing_rng(spec.seed, kMissing);
	for (std::size_t i = 0; i < blanks; ++i) {
		const auto j = i + static_cast<std::size_t>(missing_rng.below(n - i));
		std::swap(order[i], order[j]);
		price[order[i]] = std::nullopt;
	}

	auto to_cells = [](const std::vector<double>& v) { return std::vector<Cell>(v.begin(), v.end()); };
	std::vector<core::Column> exogenous{
	    {std::string(core::kTemperature), to_cells(temperature)},
	    {std::string(core::kHumidity), to_cells(humidity)},
	    {std::string(core::kPrecipitation), to_cells(precipitation)},
	    {std::string(core::kCrudeOil), to_cells(crude)},
	};
	std::vector<Date> timestamps(n);
	for (std::size_t t = 0; t < n; ++t) {
		timestamps[t] = core::Series::default_start() + std::chrono::days{static_cast<long>(t) * core::kDaysPerWeek};
	}
	return FeatureFrame(core::Series(std::move(timestamps), std::move(price)), std::move(exogenous));
}

} // namespace agri::ingest
