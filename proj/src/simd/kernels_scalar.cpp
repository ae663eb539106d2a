#include "agri/simd/kernels.hpp"

namespace agri::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
	double sum = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		sum += a[i] * b[i];
	}
	return sum;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
	double sum = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double d = a[i] - b[i];
		sum += d * d;
	}
	return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
	for (std::size_t i = 0; i < n; ++i) {
		y[i] += alpha * x[i];
	}
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
	for (std::size_t r = 0; r < rows; ++r) {
		y[r] += dot_scalar(a + r * cols, x, cols);
	}
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
	for (std::size_t r = 0; r < rows; ++r) {
		axpy_scalar(x[r], a + r * cols, y, cols);
	}
}

void rank1_scalar(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v) {
	for (std::size_t r = 0; r < rows; ++r) {
		axpy_scalar(u[r], v, a + r * cols, cols);
	}
}

} // namespace

const Kernels& scalar_kernels() {
	static const Kernels table{Isa::Scalar,  dot_scalar,     squared_distance_scalar, axpy_scalar,
	                           gemv_scalar,  gemv_t_scalar,  rank1_scalar};
	return table;
}

} // namespace agri::simd
