#pragma once

#include "agri/core/series.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agri::ingest {

/// Header of the weekly price CSV, byte for byte.
inline constexpr std::string_view kCsvHeader =
    "date,commodity,price_myr,temperature_c,humidity_pct,precipitation_mm,crude_oil_usd";

struct RawRecord {
	core::Date date;
	std::string commodity;
	std::optional<double> price;
	std::optional<double> temperature;
	std::optional<double> humidity;
	std::optional<double> precipitation;
	std::optional<double> crude_oil;
};

struct LoadResult {
	core::FeatureFrame frame;
	std::vector<std::string> warnings;
};

/// Parses every record of a CSV stream. Throws ErrorCode::ParseError with the
/// 1-based line number and column name, or ErrorCode::EmptyFile.
std::vector<RawRecord> read_records(std::istream& in);

/// Builds the frame of one commodity: dates snapped to ISO-week Mondays,
/// sorted, deduplicated (first row wins, warning emitted) and completed onto
/// a gap-free weekly grid with missing cells. Exogenous columns with no
/// observed value are omitted. Throws ErrorCode::UnknownCommodity.
LoadResult assemble(const std::vector<RawRecord>& records, std::string_view commodity);

LoadResult load_csv(std::istream& in, std::string_view commodity);
LoadResult load_csv(const std::filesystem::path& path, std::string_view commodity);
/// All commodities of a file, keyed by name.
std::map<std::string, LoadResult> load_csv_all(const std::filesystem::path& path);

/// Writes one commodity in the CSV schema with round-trip exact decimals.
void write_csv(std::ostream& out, std::string_view commodity, const core::FeatureFrame& frame,
               bool with_header = true);
std::string to_csv(std::string_view commodity, const core::FeatureFrame& frame);

enum class MissingStrategy { SentinelFill, DropRows, ForwardFill };

/// The fill value of the sentinel strategy. It dominates squared distances
/// and so badly distorts kernel and tree models; forward fill is the default.
inline constexpr double kSentinel = -99999.0;

struct MissingPolicy {
	MissingStrategy strategy = MissingStrategy::ForwardFill;
};

std::string_view to_string(MissingStrategy strategy);
/// Accepts "sentinel", "drop" or "ffill". Throws ErrorCode::InvalidArgument.
MissingStrategy parse_strategy(std::string_view text);

/// Throws ErrorCode::AllMissingColumn when a column has no observed value
/// (drop_rows and forward_fill only).
core::FeatureFrame apply_missing_policy(const core::FeatureFrame& frame, MissingPolicy policy);

struct SyntheticSpec {
	std::string commodity;
	double mean = 0.0;
	double min = 0.0;
	double max = 0.0;
	double stddev = 0.0;
	double missing_rate = 0.02;
	std::size_t n_weeks = 588;
	std::uint64_t seed = 27;

	/// Throws ErrorCode::InvalidSpec.
	void validate() const;
};

/// Commodities with built-in synthetic presets. The first three carry the
/// published raw-data statistics; the rest are illustrative.
const std::vector<SyntheticSpec>& presets();
std::optional<SyntheticSpec> preset(std::string_view commodity);

/// Seasonal + AR(1) price process with a crude-oil contribution, standardized
/// to the requested mean and standard deviation and clipped into [min, max].
/// Exactly floor(missing_rate * n_weeks) price cells are blanked.
core::FeatureFrame generate_synthetic(const SyntheticSpec& spec);

} // namespace agri::ingest
