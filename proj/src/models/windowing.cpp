#include "agri/models/windowing.hpp"

#include "agri/error.hpp"

namespace agri::models {

namespace {

std::vector<std::vector<double>> dense_columns(const core::FeatureFrame& frame, bool multivariate) {
	std::vector<std::vector<double>> columns;
	const std::size_t count = multivariate ? frame.column_count() : 1;
	for (std::size_t c = 0; c < count; ++c) {
		columns.push_back(frame.dense(c));
	}
	return columns;
}

} // namespace

Supervised make_supervised(const core::FeatureFrame& frame, std::size_t window, bool multivariate) {
	if (window < 1) {
		throw Error(ErrorCode::InvalidArgument, "window must be at least 1");
	}
	if (frame.rows() <= window) {
		throw Error(ErrorCode::TooShort, "frame of " + std::to_string(frame.rows()) + " rows cannot feed window " +
		                                     std::to_string(window));
	}
	const auto columns = dense_columns(frame, multivariate);
	const std::size_t width = window + columns.size() - 1;
	Supervised out;
	out.features = core::Matrix(frame.rows() - window, width);
	out.targets.resize(frame.rows() - window);
	const auto& price = columns[0];
	for (std::size_t t = window; t < frame.rows(); ++t) {
		auto row = out.features.row(t - window);
		for (std::size_t k = 0; k < window; ++k) {
			row[k] = price[t - window + k];
		}
		for (std::size_t c = 1; c < columns.size(); ++c) {
			row[window + c - 1] = columns[c][t - 1];
		}
		out.targets[t - window] = price[t];
	}
	return out;
}

std::vector<double> last_feature_row(const core::FeatureFrame& frame, std::size_t window, bool multivariate) {
	if (frame.rows() < window) {
		throw Error(ErrorCode::TooShort, "history shorter than the feature window");
	}
	const auto columns = dense_columns(frame.slice(frame.rows() - window, frame.rows()), multivariate);
	std::vector<double> row(columns[0].begin(), columns[0].end());
	for (std::size_t c = 1; c < columns.size(); ++c) {
		row.push_back(columns[c].back());
	}
	return row;
}

std::vector<double> recursive_forecast(const core::FeatureFrame& history, std::size_t window, bool multivariate,
                                       std::size_t horizon,
                                       const std::function<double(std::span<const double>)>& predict_row) {
	if (horizon < 1) {
		throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
	}
	auto row = last_feature_row(history, window, multivariate);
	std::vector<double> out;
	out.reserve(horizon);
	for (std::size_t h = 0; h < horizon; ++h) {
		const double next = predict_row(row);
		out.push_back(next);
		std::move(row.begin() + 1, row.begin() + static_cast<long>(window), row.begin());
		row[window - 1] = next;
	}
	return out;
}

} // namespace agri::models
