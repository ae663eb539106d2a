#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace agri::core {

using Date = std::chrono::sys_days;
/// A price or feature observation; std::nullopt marks a missing cell.
using Cell = std::optional<double>;

inline constexpr int kDaysPerWeek = 7;

/// Parses a `YYYY-MM-DD` calendar date. Throws ErrorCode::ParseError.
Date parse_date(std::string_view text);
std::string format_date(Date date);
/// Monday of the ISO week containing `date`.
Date week_monday(Date date);

/// Weekly timestamped price sequence.
class Series {
public:
	Series() = default;
	/// Throws ErrorCode::LengthMismatch or ErrorCode::InvalidArgument when
	/// timestamps are not strictly increasing.
	Series(std::vector<Date> timestamps, std::vector<Cell> values);

	/// Builds a gap-free weekly series starting at `start`.
	static Series weekly(std::span<const double> values, Date start = default_start());
	static Date default_start();

	std::size_t size() const noexcept {
		return values_.size();
	}
	bool empty() const noexcept {
		return values_.empty();
	}
	const std::vector<Date>& timestamps() const noexcept {
		return timestamps_;
	}
	const std::vector<Cell>& values() const noexcept {
		return values_;
	}
	std::size_t missing_count() const noexcept;
	bool has_missing() const noexcept {
		return missing_count() > 0;
	}
	/// Values as plain doubles. Throws ErrorCode::MissingValue if any cell is missing.
	std::vector<double> dense() const;

	Series slice(std::size_t begin, std::size_t end) const;

	bool operator==(const Series&) const = default;

private:
	std::vector<Date> timestamps_;
	std::vector<Cell> values_;
};

struct Column {
	std::string name;
	std::vector<Cell> cells;

	bool operator==(const Column&) const = default;
};

inline constexpr std::string_view kPriceColumn = "price_myr";
inline constexpr std::string_view kTemperature = "temperature_c";
inline constexpr std::string_view kHumidity = "humidity_pct";
inline constexpr std::string_view kPrecipitation = "precipitation_mm";
inline constexpr std::string_view kCrudeOil = "crude_oil_usd";

/// The four exogenous columns, in CSV order.
const std::vector<std::string>& exogenous_names();

/// Price series joined with aligned exogenous columns. Column index 0 is the
/// price; indices 1.. are the exogenous columns in insertion order.
class FeatureFrame {
public:
	FeatureFrame() = default;
	explicit FeatureFrame(Series base, std::vector<Column> exogenous = {});

	const Series& base() const noexcept {
		return base_;
	}
	const std::vector<Column>& exogenous() const noexcept {
		return exogenous_;
	}
	std::size_t rows() const noexcept {
		return base_.size();
	}
	const std::vector<Date>& timestamps() const noexcept {
		return base_.timestamps();
	}

	std::size_t column_count() const noexcept {
		return 1 + exogenous_.size();
	}
	std::string column_name(std::size_t index) const;
	const std::vector<Cell>& cells(std::size_t index) const;
	std::optional<std::size_t> find_column(std::string_view name) const;
	bool has_column(std::string_view name) const {
		return find_column(name).has_value();
	}
	/// Dense copy of one column. Throws ErrorCode::MissingValue.
	std::vector<double> dense(std::size_t index) const;
	std::size_t missing_count() const noexcept;

	FeatureFrame slice(std::size_t begin, std::size_t end) const;
	/// Keeps only the price column.
	FeatureFrame price_only() const;
	/// Copy with the given column replaced (same length required).
	FeatureFrame with_cells(std::size_t index, std::vector<Cell> cells) const;

	bool operator==(const FeatureFrame&) const = default;

private:
	Series base_;
	std::vector<Column> exogenous_;
};

/// Per-column affine map onto [0,1].
class MinMaxScaler {
public:
	struct Range {
		std::string name;
		double min = 0.0;
		double max = 1.0;

		bool operator==(const Range&) const = default;
	};

	MinMaxScaler() = default;
	explicit MinMaxScaler(std::vector<Range> ranges);

	/// Throws ErrorCode::ConstantColumn naming the first column whose
	/// non-missing values are not at least two distinct numbers.
	static MinMaxScaler fit(const FeatureFrame& frame);

	FeatureFrame transform(const FeatureFrame& frame) const;
	/// Throws ErrorCode::UnknownColumn for columns the scaler was not fitted on.
	FeatureFrame inverse(const FeatureFrame& frame) const;

	const Range& range(std::string_view name) const;
	double transform_value(std::string_view name, double value) const;
	double inverse_value(std::string_view name, double scaled) const;
	const std::vector<Range>& ranges() const noexcept {
		return ranges_;
	}

	bool operator==(const MinMaxScaler&) const = default;

private:
	std::vector<Range> ranges_;
};

std::pair<FeatureFrame, MinMaxScaler> scale_fit_transform(const FeatureFrame& frame);
FeatureFrame scale_inverse(const FeatureFrame& scaled, const MinMaxScaler& scaler);

/// output[i] = input[i + lag] - input[i].
Series difference(const Series& series, std::size_t lag = 1);
/// Inverse of difference: anchors are the `lag` original values preceding the
/// first differenced entry.
Series undifference(const Series& diffed, std::span<const double> anchors, std::size_t lag = 1);
/// Dense-vector forms of the above, used by the model code.
std::vector<double> difference(std::span<const double> values, std::size_t lag = 1);
std::vector<double> undifference(std::span<const double> diffed, std::span<const double> anchors,
                                 std::size_t lag = 1);

double mse(std::span<const double> actual, std::span<const double> predicted);

/// Absolute tolerance used when comparing metrics for ties.
inline constexpr double kTieTolerance = 1e-12;

enum class SplitMode { Holdout, ExpandingWindow };

struct SplitSpec {
	SplitMode mode = SplitMode::Holdout;
	double train_fraction = 0.9;
	std::size_t folds = 3;

	void validate() const;
};

struct Partition {
	FeatureFrame train;
	FeatureFrame test;
};

/// Number of training rows for a holdout split of `rows` rows.
std::size_t holdout_train_rows(std::size_t rows, double train_fraction);

/// Chronological prefix/suffix split. Throws ErrorCode::TooShort below 10 rows.
Partition holdout_split(const FeatureFrame& frame, const SplitSpec& spec);

struct FoldBounds {
	std::size_t train_end;
	std::size_t test_end;
};
/// Expanding-window schedule: test windows of rows/(2*folds) rows, the last
/// one ending at the final row that fits.
std::vector<FoldBounds> expanding_window_bounds(std::size_t rows, std::size_t folds);
std::vector<Partition> expanding_window_split(const FeatureFrame& frame, const SplitSpec& spec);

/// Dispatches on spec.mode; holdout yields a single partition.
std::vector<Partition> split(const FeatureFrame& frame, const SplitSpec& spec);

} // namespace agri::core
