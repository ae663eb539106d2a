#pragma once

// Dense double-precision inner loops shared by the kernel SVR and the LSTM.
//
// Every kernel has a portable scalar reference and, where the build target
// supports it, an AVX2/FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once per process from the running CPU; setting AGRI_SIMD=scalar in
// the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace agri::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Row-major matrices throughout: element (r, c) lives at a[r * cols + c].
struct Kernels {
	Isa isa;
	double (*dot)(const double* a, const double* b, std::size_t n);
	double (*squared_distance)(const double* a, const double* b, std::size_t n);
	/// y += alpha * x
	void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
	/// y += A x
	void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
	/// y += A^T x
	void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
	/// A += u v^T
	void (*rank1)(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v);
};

const Kernels& scalar_kernels();
/// nullptr when the variant was not compiled in or the CPU lacks the feature.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

/// The dispatched table for this process.
const Kernels& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
	return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
	return active().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
	active().axpy(alpha, x.data(), y.data(), x.size());
}

} // namespace agri::simd
