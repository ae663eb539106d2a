#pragma once

#include "agri/core/random.hpp"
#include "agri/core/series.hpp"
#include "agri/ingest/ingest.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace agri::testing {

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
	core::CounterRng rng(seed, 77);
	std::vector<double> out(n);
	for (auto& v : out) {
		v = sigma * rng.normal();
	}
	return out;
}

/// x[t] = c + phi * x[t-1] + e[t], with a burn-in of 200 steps.
inline std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed, double sigma = 1.0, double c = 0.0) {
	const auto e = gaussian_noise(n + 200, seed, sigma);
	std::vector<double> out;
	out.reserve(n);
	double x = c / (1.0 - phi);
	for (std::size_t t = 0; t < e.size(); ++t) {
		x = c + phi * x + e[t];
		if (t >= 200) {
			out.push_back(x);
		}
	}
	return out;
}

inline std::vector<double> ar2(std::size_t n, double phi1, double phi2, std::uint64_t seed) {
	const auto e = gaussian_noise(n + 200, seed);
	std::vector<double> out;
	double x1 = 0.0, x2 = 0.0;
	for (std::size_t t = 0; t < e.size(); ++t) {
		const double x = phi1 * x1 + phi2 * x2 + e[t];
		x2 = x1;
		x1 = x;
		if (t >= 200) {
			out.push_back(x);
		}
	}
	return out;
}

inline std::vector<double> ma1(std::size_t n, double theta, std::uint64_t seed, double sigma = 1.0) {
	const auto e = gaussian_noise(n + 1, seed, sigma);
	std::vector<double> out(n);
	for (std::size_t t = 0; t < n; ++t) {
		out[t] = e[t + 1] + theta * e[t];
	}
	return out;
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed, double start = 5.0, double sigma = 0.1) {
	const auto e = gaussian_noise(n, seed, sigma);
	std::vector<double> out(n);
	double x = start;
	for (std::size_t t = 0; t < n; ++t) {
		x += e[t];
		out[t] = x;
	}
	return out;
}

inline core::FeatureFrame price_frame(std::span<const double> values) {
	return core::FeatureFrame(core::Series::weekly(values));
}

/// Synthetic commodity with exogenous columns and no missing cells.
inline core::FeatureFrame synthetic(std::string_view commodity, std::size_t weeks, std::uint64_t seed = 27,
                                    double missing_rate = 0.0) {
	auto spec = *ingest::preset(commodity);
	spec.n_weeks = weeks;
	spec.seed = seed;
	spec.missing_rate = missing_rate;
	return ingest::generate_synthetic(spec);
}

inline double relative_error(double a, double b) {
	return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace agri::testing
