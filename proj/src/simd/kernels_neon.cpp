// aarch64 only; the dispatcher references these when __aarch64__ is defined.
#include "agri/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace agri::simd::neon {

double dot(const double* a, const double* b, std::size_t n) {
	float64x2_t acc0 = vdupq_n_f64(0.0);
	float64x2_t acc1 = vdupq_n_f64(0.0);
	std::size_t i = 0;
	for (; i + 4 <= n; i += 4) {
		acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
		acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
	}
	double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
	for (; i < n; ++i) {
		sum += a[i] * b[i];
	}
	return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
	float64x2_t acc = vdupq_n_f64(0.0);
	std::size_t i = 0;
	for (; i + 2 <= n; i += 2) {
		const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
		acc = vfmaq_f64(acc, d, d);
	}
	double sum = vaddvq_f64(acc);
	for (; i < n; ++i) {
		const double d = a[i] - b[i];
		sum += d * d;
	}
	return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
	const float64x2_t va = vdupq_n_f64(alpha);
	std::size_t i = 0;
	for (; i + 2 <= n; i += 2) {
		vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
	}
	for (; i < n; ++i) {
		y[i] += alpha * x[i];
	}
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
	for (std::size_t r = 0; r < rows; ++r) {
		y[r] += dot(a + r * cols, x, cols);
	}
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
	for (std::size_t r = 0; r < rows; ++r) {
		axpy(x[r], a + r * cols, y, cols);
	}
}

void rank1(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v) {
	for (std::size_t r = 0; r < rows; ++r) {
		axpy(u[r], v, a + r * cols, cols);
	}
}

} // namespace agri::simd::neon
#endif
