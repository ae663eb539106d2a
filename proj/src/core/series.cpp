#include "agri/core/series.hpp"

#include "agri/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace agri::core {

namespace {

int parse_int(std::string_view text, std::string_view original) {
	int value = 0;
	auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
	if (ec != std::errc() || ptr != text.data() + text.size()) {
		throw Error(ErrorCode::ParseError, "invalid date '" + std::string(original) + "'");
	}
	return value;
}

} // namespace

Date parse_date(std::string_view text) {
	if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
		throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
	}
	const int y = parse_int(text.substr(0, 4), text);
	const int m = parse_int(text.substr(5, 2), text);
	const int d = parse_int(text.substr(8, 2), text);
	const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
	                                      std::chrono::day{static_cast<unsigned>(d)}};
	if (!ymd.ok()) {
		throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
	}
	return Date{ymd};
}

std::string format_date(Date date) {
	const std::chrono::year_month_day ymd{date};
	char buffer[16];
	std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
	              static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
	return buffer;
}

Date week_monday(Date date) {
	// 1970-01-01 was a Thursday.
	const auto days = date.time_since_epoch().count();
	const auto offset = ((days + 3) % 7 + 7) % 7;
	return date - std::chrono::days{offset};
}

Series::Series(std::vector<Date> timestamps, std::vector<Cell> values)
    : timestamps_(std::move(timestamps)), values_(std::move(values)) {
	if (timestamps_.size() != values_.size()) {
		throw Error(ErrorCode::LengthMismatch, "timestamps and values differ in length");
	}
	for (std::size_t i = 1; i < timestamps_.size(); ++i) {
		if (timestamps_[i] <= timestamps_[i - 1]) {
			throw Error(ErrorCode::InvalidArgument, "timestamps must be strictly increasing");
		}
	}
}

Date Series::default_start() {
	return Date{std::chrono::year{2008} / std::chrono::December / std::chrono::day{1}};
}

Series Series::weekly(std::span<const double> values, Date start) {
	std::vector<Date> ts(values.size());
	std::vector<Cell> cells(values.size());
	for (std::size_t i = 0; i < values.size(); ++i) {
		ts[i] = start + std::chrono::days{static_cast<long>(i) * kDaysPerWeek};
		cells[i] = values[i];
	}
	return Series(std::move(ts), std::move(cells));
}

std::size_t Series::missing_count() const noexcept {
	return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::nullopt));
}

std::vector<double> Series::dense() const {
	std::vector<double> out;
	out.reserve(values_.size());
	for (std::size_t i = 0; i < values_.size(); ++i) {
		if (!values_[i]) {
			throw Error(ErrorCode::MissingValue, "missing value at " + format_date(timestamps_[i]));
		}
		out.push_back(*values_[i]);
	}
	return out;
}

Series Series::slice(std::size_t begin, std::size_t end) const {
	end = std::min(end, size());
	begin = std::min(begin, end);
	return Series({timestamps_.begin() + begin, timestamps_.begin() + end},
	              {values_.begin() + begin, values_.begin() + end});
}

const std::vector<std::string>& exogenous_names() {
	static const std::vector<std::string> names{std::string(kTemperature), std::string(kHumidity),
	                                            std::string(kPrecipitation), std::string(kCrudeOil)};
	return names;
}

FeatureFrame::FeatureFrame(Series base, std::vector<Column> exogenous)
    : base_(std::move(base)), exogenous_(std::move(exogenous)) {
	std::set<std::string> names{std::string(kPriceColumn)};
	for (const auto& column : exogenous_) {
		if (column.cells.size() != base_.size()) {
			throw Error(ErrorCode::LengthMismatch, "column '" + column.name + "' is not aligned with the price series");
		}
		if (!names.insert(column.name).second) {
			throw Error(ErrorCode::InvalidArgument, "duplicate column '" + column.name + "'");
		}
	}
}

std::string FeatureFrame::column_name(std::size_t index) const {
	if (index == 0) {
		return std::string(kPriceColumn);
	}
	return exogenous_.at(index - 1).name;
}

const std::vector<Cell>& FeatureFrame::cells(std::size_t index) const {
	if (index == 0) {
		return base_.values();
	}
	return exogenous_.at(index - 1).cells;
}

std::optional<std::size_t> FeatureFrame::find_column(std::string_view name) const {
	if (name == kPriceColumn) {
		return 0;
	}
	for (std::size_t i = 0; i < exogenous_.size(); ++i) {
		if (exogenous_[i].name == name) {
			return i + 1;
		}
	}
	return std::nullopt;
}

std::vector<double> FeatureFrame::dense(std::size_t index) const {
	const auto& column = cells(index);
	std::vector<double> out;
	out.reserve(column.size());
	for (std::size_t i = 0; i < column.size(); ++i) {
		if (!column[i]) {
			throw Error(ErrorCode::MissingValue,
			            "missing '" + column_name(index) + "' at " + format_date(timestamps()[i]));
		}
		out.push_back(*column[i]);
	}
	return out;
}

std::size_t FeatureFrame::missing_count() const noexcept {
	std::size_t total = base_.missing_count();
	for (const auto& column : exogenous_) {
		total += static_cast<std::size_t>(std::count(column.cells.begin(), column.cells.end(), std::nullopt));
	}
	return total;
}

FeatureFrame FeatureFrame::slice(std::size_t begin, std::size_t end) const {
	end = std::min(end, rows());
	begin = std::min(begin, end);
	std::vector<Column> columns;
	columns.reserve(exogenous_.size());
	for (const auto& column : exogenous_) {
		columns.push_back({column.name, {column.cells.begin() + begin, column.cells.begin() + end}});
	}
	return FeatureFrame(base_.slice(begin, end), std::move(columns));
}

FeatureFrame FeatureFrame::price_only() const {
	return FeatureFrame(base_);
}

FeatureFrame FeatureFrame::with_cells(std::size_t index, std::vector<Cell> cells) const {
	if (cells.size() != rows()) {
		throw Error(ErrorCode::LengthMismatch, "replacement column has wrong length");
	}
	if (index == 0) {
		return FeatureFrame(Series(base_.timestamps(), std::move(cells)), exogenous_);
	}
	auto columns = exogenous_;
	columns.at(index - 1).cells = std::move(cells);
	return FeatureFrame(base_, std::move(columns));
}

MinMaxScaler::MinMaxScaler(std::vector<Range> ranges) : ranges_(std::move(ranges)) {
	for (const auto& r : ranges_) {
		if (!(r.max > r.min)) {
			throw Error(ErrorCode::ConstantColumn, "column '" + r.name + "' has max <= min");
		}
	}
}

MinMaxScaler MinMaxScaler::fit(const FeatureFrame& frame) {
	std::vector<Range> ranges;
	for (std::size_t c = 0; c < frame.column_count(); ++c) {
		double lo = std::numeric_limits<double>::infinity();
		double hi = -std::numeric_limits<double>::infinity();
		for (const auto& cell : frame.cells(c)) {
			if (cell) {
				lo = std::min(lo, *cell);
				hi = std::max(hi, *cell);
			}
		}
		if (!(hi > lo)) {
			throw Error(ErrorCode::ConstantColumn, "column '" + frame.column_name(c) + "' has fewer than two distinct values");
		}
		ranges.push_back({frame.column_name(c), lo, hi});
	}
	return MinMaxScaler(std::move(ranges));
}

const MinMaxScaler::Range& MinMaxScaler::range(std::string_view name) const {
	for (const auto& r : ranges_) {
		if (r.name == name) {
			return r;
		}
	}
	throw Error(ErrorCode::UnknownColumn, "scaler has no column '" + std::string(name) + "'");
}

double MinMaxScaler::transform_value(std::string_view name, double value) const {
	const auto& r = range(name);
	return (value - r.min) / (r.max - r.min);
}

double MinMaxScaler::inverse_value(std::string_view name, double scaled) const {
	const auto& r = range(name);
	return r.min + scaled * (r.max - r.min);
}

namespace {

template <typename Map>
FeatureFrame map_frame(const FeatureFrame& frame, const MinMaxScaler& scaler, Map map) {
	FeatureFrame out = frame;
	for (std::size_t c = 0; c < frame.column_count(); ++c) {
		const auto& range = scaler.range(frame.column_name(c));
		std::vector<Cell> cells = frame.cells(c);
		for (auto& cell : cells) {
			if (cell) {
				cell = map(range, *cell);
			}
		}
		out = out.with_cells(c, std::move(cells));
	}
	return out;
}

} // namespace

FeatureFrame MinMaxScaler::transform(const FeatureFrame& frame) const {
	return map_frame(frame, *this, [](const Range& r, double v) { return (v - r.min) / (r.max - r.min); });
}

FeatureFrame MinMaxScaler::inverse(const FeatureFrame& frame) const {
	return map_frame(frame, *this, [](const Range& r, double v) { return r.min + v * (r.max - r.min); });
}

std::pair<FeatureFrame, MinMaxScaler> scale_fit_transform(const FeatureFrame& frame) {
	auto scaler = MinMaxScaler::fit(frame);
	auto scaled = scaler.transform(frame);
	return {std::move(scaled), std::move(scaler)};
}

FeatureFrame scale_inverse(const FeatureFrame& scaled, const MinMaxScaler& scaler) {
	return scaler.inverse(scaled);
}

std::vector<double> difference(std::span<const double> values, std::size_t lag) {
	if (lag < 1) {
		throw Error(ErrorCode::InvalidArgument, "lag must be at least 1");
	}
	if (values.size() <= lag) {
		throw Error(ErrorCode::TooShort, "series length must exceed the lag");
	}
	std::vector<double> out(values.size() - lag);
	for (std::size_t i = 0; i < out.size(); ++i) {
		out[i] = values[i + lag] - values[i];
	}
	return out;
}

std::vector<double> undifference(std::span<const double> diffed, std::span<const double> anchors, std::size_t lag) {
	if (lag < 1) {
		throw Error(ErrorCode::InvalidArgument, "lag must be at least 1");
	}
	if (anchors.size() != lag) {
		throw Error(ErrorCode::AnchorMismatch, "expected " + std::to_string(lag) + " anchors, got " +
		                                           std::to_string(anchors.size()));
	}
	std::vector<double> out(diffed.size());
	for (std::size_t i = 0; i < diffed.size(); ++i) {
		const double previous = i < lag ? anchors[i] : out[i - lag];
		out[i] = previous + diffed[i];
	}
	return out;
}

Series difference(const Series& series, std::size_t lag) {
	if (lag >= 1 && series.size() <= lag) {
		throw Error(ErrorCode::TooShort, "series length must exceed the lag");
	}
	const auto values = series.dense();
	const auto diffed = difference(std::span<const double>(values), lag);
	std::vector<Date> ts(series.timestamps().begin() + static_cast<long>(lag), series.timestamps().end());
	return Series(std::move(ts), std::vector<Cell>(diffed.begin(), diffed.end()));
}

Series undifference(const Series& diffed, std::span<const double> anchors, std::size_t lag) {
	const auto values = diffed.dense();
	const auto restored = undifference(std::span<const double>(values), anchors, lag);
	return Series(diffed.timestamps(), std::vector<Cell>(restored.begin(), restored.end()));
}

double mse(std::span<const double> actual, std::span<const double> predicted) {
	if (actual.size() != predicted.size()) {
		throw Error(ErrorCode::LengthMismatch, "actual has " + std::to_string(actual.size()) +
		                                           " values, predicted has " + std::to_string(predicted.size()));
	}
	if (actual.empty()) {
		throw Error(ErrorCode::Empty, "mse of empty vectors");
	}
	double total = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		const double r = actual[i] - predicted[i];
		total += r * r;
	}
	return total / static_cast<double>(actual.size());
}

void SplitSpec::validate() const {
	if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
		throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
	}
	if (mode == SplitMode::ExpandingWindow && folds < 2) {
		throw Error(ErrorCode::InvalidArgument, "expanding-window split needs at least 2 folds");
	}
}

std::size_t holdout_train_rows(std::size_t rows, double train_fraction) {
	auto train = static_cast<std::size_t>(std::floor(static_cast<double>(rows) * train_fraction + 1e-9));
	return std::clamp<std::size_t>(train, 1, rows - 1);
}

Partition holdout_split(const FeatureFrame& frame, const SplitSpec& spec) {
	spec.validate();
	if (frame.rows() < 10) {
		throw Error(ErrorCode::TooShort, "holdout split needs at least 10 rows, got " + std::to_string(frame.rows()));
	}
	const auto train = holdout_train_rows(frame.rows(), spec.train_fraction);
	return {frame.slice(0, train), frame.slice(train, frame.rows())};
}

std::vector<FoldBounds> expanding_window_bounds(std::size_t rows, std::size_t folds) {
	if (folds < 2) {
		throw Error(ErrorCode::InvalidArgument, "expanding-window split needs at least 2 folds");
	}
	const std::size_t window = rows / (2 * folds);
	if (window < 1 || rows - folds * window < 2) {
		throw Error(ErrorCode::TooShort, std::to_string(rows) + " rows cannot hold " + std::to_string(folds) + " folds");
	}
	std::vector<FoldBounds> bounds;
	for (std::size_t k = 0; k < folds; ++k) {
		const std::size_t train_end = rows - (folds - k) * window;
		bounds.push_back({train_end, train_end + window});
	}
	return bounds;
}

std::vector<Partition> expanding_window_split(const FeatureFrame& frame, const SplitSpec& spec) {
	spec.validate();
	std::vector<Partition> out;
	for (const auto& b : expanding_window_bounds(frame.rows(), spec.folds)) {
		out.push_back({frame.slice(0, b.train_end), frame.slice(b.train_end, b.test_end)});
	}
	return out;
}

std::vector<Partition> split(const FeatureFrame& frame, const SplitSpec& spec) {
	if (spec.mode == SplitMode::Holdout) {
		return {holdout_split(frame, spec)};
	}
	return expanding_window_split(frame, spec);
}

} // namespace agri::core
