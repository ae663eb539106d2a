#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace agri::core {

/// SplitMix64 output finalizer (Steele, Lea & Flood constants).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
	x ^= x >> 30;
	x *= 0xBF58476D1CE4E5B9ULL;
	x ^= x >> 27;
	x *= 0x94D049BB133111EBULL;
	x ^= x >> 31;
	return x;
}

/// Counter-based generator. Draw number `counter` of stream `stream` under
/// `seed` is
///
///     key   = mix64(seed ^ mix64(stream * 0xD1B54A32D192ED03 + 0x2545F4914F6CDD1D))
///     value = mix64(key + (counter + 1) * 0x9E3779B97F4A7C15)
///
/// so any draw can be reproduced from (seed, stream, counter) alone, in any
/// language, without replaying earlier draws.
class CounterRng {
public:
	explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
	    : key_(mix64(seed ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL))) {}

	static std::uint64_t at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
		return CounterRng(seed, stream).draw(counter);
	}

	std::uint64_t draw(std::uint64_t counter) const noexcept {
		return mix64(key_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
	}

	std::uint64_t next() noexcept {
		return draw(counter_++);
	}

	/// Uniform on [0, 1) with 53 random bits.
	double uniform() noexcept {
		return static_cast<double>(next() >> 11) * 0x1.0p-53;
	}

	double uniform(double lo, double hi) noexcept {
		return lo + (hi - lo) * uniform();
	}

	/// Uniform integer in [0, n).
	std::uint64_t below(std::uint64_t n) noexcept {
		return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
	}

	/// Standard normal via Box-Muller; consumes two draws.
	double normal() noexcept {
		const double u1 = 1.0 - uniform();
		const double u2 = uniform();
		return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
	}

	std::uint64_t counter() const noexcept {
		return counter_;
	}

private:
	std::uint64_t key_;
	std::uint64_t counter_ = 0;
};

} // namespace agri::core
