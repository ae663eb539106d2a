#include "agri/simd/kernels.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace agri;

namespace {

std::vector<const simd::Kernels*> variants() {
	std::vector<const simd::Kernels*> out;
	if (const auto* k = simd::avx2_kernels()) out.push_back(k);
	if (const auto* k = simd::neon_kernels()) out.push_back(k);
	return out;
}

// Lengths straddle every vector-width remainder.
constexpr std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 101, 257};

double tol(double scale, std::size_t n) {
	return 1e-14 * (1.0 + scale) * static_cast<double>(n + 1);
}

} // namespace

TEST_CASE("dispatch reports an ISA") {
	const auto& k = simd::active();
	CHECK(!simd::isa_name(k.isa).empty());
	CHECK(simd::scalar_kernels().isa == simd::Isa::Scalar);
	MESSAGE("active kernels: " << simd::isa_name(k.isa));
}

TEST_CASE("scalar reference kernels on hand values") {
	const auto& s = simd::scalar_kernels();
	const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
	CHECK(s.dot(a, b, 3) == 12.0);
	CHECK(s.squared_distance(a, b, 3) == 9.0 + 49.0 + 9.0);
	double y[] = {1, 1, 1};
	s.axpy(2.0, a, y, 3);
	CHECK(y[2] == 7.0);
	const double m[] = {1, 2, 3, 4, 5, 6}; // 2x3
	double mv[] = {0, 0};
	s.gemv(m, 2, 3, a, mv);
	CHECK(mv[0] == 14.0);
	CHECK(mv[1] == 32.0);
	const double u[] = {1, -1};
	double mt[] = {0, 0, 0};
	s.gemv_t(m, 2, 3, u, mt);
	CHECK(mt[0] == -3.0);
	double r[6] = {};
	s.rank1(r, 2, 3, u, a);
	CHECK(r[5] == -3.0);
}

TEST_CASE("vector kernels match the scalar reference") {
	const auto& s = simd::scalar_kernels();
	const auto vs = variants();
	if (vs.empty()) {
		MESSAGE("no vector variant on this CPU; equivalence checked against scalar only");
	}
	for (const auto* k : vs) {
		CAPTURE(simd::isa_name(k->isa));
		for (const std::size_t n : kLengths) {
			CAPTURE(n);
			const auto a = testing::gaussian_noise(n, 11 + n);
			const auto b = testing::gaussian_noise(n, 97 + n);
			CHECK(std::abs(k->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) < tol(1.0, n));
			CHECK(std::abs(k->squared_distance(a.data(), b.data(), n) - s.squared_distance(a.data(), b.data(), n)) <
			      tol(4.0, n));

			auto y1 = b, y2 = b;
			k->axpy(-0.75, a.data(), y1.data(), n);
			s.axpy(-0.75, a.data(), y2.data(), n);
			for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-14);

			for (const std::size_t rows : {1u, 3u, 8u, 13u}) {
				const auto m = testing::gaussian_noise(rows * n, 5 + rows * n);
				const auto x = testing::gaussian_noise(rows, 3 + rows);
				std::vector<double> g1(rows, 0.5), g2(rows, 0.5);
				k->gemv(m.data(), rows, n, a.data(), g1.data());
				s.gemv(m.data(), rows, n, a.data(), g2.data());
				for (std::size_t i = 0; i < rows; ++i) CHECK(std::abs(g1[i] - g2[i]) < tol(1.0, n));

				std::vector<double> t1(n, -0.5), t2(n, -0.5);
				k->gemv_t(m.data(), rows, n, x.data(), t1.data());
				s.gemv_t(m.data(), rows, n, x.data(), t2.data());
				for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(t1[i] - t2[i]) < tol(1.0, rows));

				auto r1 = m, r2 = m;
				k->rank1(r1.data(), rows, n, x.data(), a.data());
				s.rank1(r2.data(), rows, n, x.data(), a.data());
				for (std::size_t i = 0; i < r1.size(); ++i) CHECK(std::abs(r1[i] - r2[i]) < 1e-14);
			}
		}
	}
}
