#include "agri/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace agri::simd {

#if defined(AGRI_HAVE_AVX2)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double squared_distance(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void gemv(const double*, std::size_t, std::size_t, const double*, double*);
void gemv_t(const double*, std::size_t, std::size_t, const double*, double*);
void rank1(double*, std::size_t, std::size_t, const double*, const double*);
} // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double*, const double*, std::size_t);
double squared_distance(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void gemv(const double*, std::size_t, std::size_t, const double*, double*);
void gemv_t(const double*, std::size_t, std::size_t, const double*, double*);
void rank1(double*, std::size_t, std::size_t, const double*, const double*);
} // namespace neon
#endif

std::string_view isa_name(Isa isa) {
	switch (isa) {
	case Isa::Scalar: return "scalar";
	case Isa::Avx2: return "avx2";
	case Isa::Neon: return "neon";
	}
	return "unknown";
}

const Kernels* avx2_kernels() {
#if defined(AGRI_HAVE_AVX2)
	static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
	static const Kernels table{Isa::Avx2,   avx2::dot,    avx2::squared_distance, avx2::axpy,
	                           avx2::gemv,  avx2::gemv_t, avx2::rank1};
	return supported ? &table : nullptr;
#else
	return nullptr;
#endif
}

const Kernels* neon_kernels() {
#if defined(__aarch64__)
	static const Kernels table{Isa::Neon,   neon::dot,    neon::squared_distance, neon::axpy,
	                           neon::gemv,  neon::gemv_t, neon::rank1};
	return &table;
#else
	return nullptr;
#endif
}

const Kernels& active() {
	static const Kernels& chosen = [] () -> const Kernels& {
		if (const char* env = std::getenv("AGRI_SIMD"); env && std::string_view(env) == "scalar") {
			return scalar_kernels();
		}
		if (const auto* k = avx2_kernels()) {
			return *k;
		}
		if (const auto* k = neon_kernels()) {
			return *k;
		}
		return scalar_kernels();
	}();
	return chosen;
}

} // namespace agri::simd
