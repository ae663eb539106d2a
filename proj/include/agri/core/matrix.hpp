#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agri::core {

/// Dense row-major matrix of doubles.
class Matrix {
public:
	Matrix() = default;
	Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

	std::size_t rows() const noexcept {
		return rows_;
	}
	std::size_t cols() const noexcept {
		return cols_;
	}
	double& operator()(std::size_t r, std::size_t c) noexcept {
		return data_[r * cols_ + c];
	}
	double operator()(std::size_t r, std::size_t c) const noexcept {
		return data_[r * cols_ + c];
	}
	std::span<double> row(std::size_t r) noexcept {
		return {data_.data() + r * cols_, cols_};
	}
	std::span<const double> row(std::size_t r) const noexcept {
		return {data_.data() + r * cols_, cols_};
	}
	const std::vector<double>& data() const noexcept {
		return data_;
	}
	std::vector<double>& data() noexcept {
		return data_;
	}
	void append_row(std::span<const double> values) {
		if (rows_ == 0 && cols_ == 0) {
			cols_ = values.size();
		}
		data_.insert(data_.end(), values.begin(), values.end());
		++rows_;
	}

	bool operator==(const Matrix&) const = default;

private:
	std::size_t rows_ = 0;
	std::size_t cols_ = 0;
	std::vector<double> data_;
};

/// Ordinary least squares by column-pivoted QR.
struct OlsResult {
	std::vector<double> coefficients;
	std::vector<double> standard_errors;
	std::vector<double> residuals;
	double sse = 0.0;
	std::size_t nobs = 0;
};

/// Throws ErrorCode::SingularRegression when the design is rank deficient.
OlsResult ols(const Matrix& design, std::span<const double> response);

} // namespace agri::core
