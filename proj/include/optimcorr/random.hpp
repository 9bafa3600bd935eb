#pragma once

#include <cstdint>
#include <random>

namespace optimcorr {

/// Purpose tags keep the streams drawn for different jobs disjoint.
enum class StreamPurpose : std::uint64_t {
  Bootstrap = 1,
  CvFolds = 2,
  Derivation = 3,
  External = 4,
  Calibration = 5,
  Pipeline = 6,
};

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for the stream identified by (master, index, purpose). Depends only on
/// the key, never on how many other streams were drawn before it.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, StreamPurpose purpose) noexcept;

Rng make_stream(std::uint64_t master, std::uint64_t index, StreamPurpose purpose);

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, bound) by rejection (no modulo bias).
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

/// Standard normal via the polar method.
double standard_normal(Rng& rng);

}  // namespace optimcorr
