#pragma once

#include "mppi/diffusion.hpp"

#include <cstdint>
#include <span>

namespace mppi {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent key from a parent key and a tag.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from 53 random bits.
constexpr double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based standard normal stream.
///
/// The vector drawn for (k, i) is a pure function of (master_seed, k, i), so
/// rollouts can be evaluated in any order on any number of workers and still
/// see identical noise.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, Index dim) : seed_(master_seed), dim_(dim) {}

  std::uint64_t seed() const { return seed_; }
  Index dim() const { return dim_; }

  Vector draw(std::uint64_t k, std::uint64_t i) const;
  void draw(std::uint64_t k, std::uint64_t i, std::span<double> out) const;
  /// Draws for steps first_step, first_step + 1, ... laid out step-major;
  /// identical to calling draw(k, i) per step.
  void draw_steps(std::uint64_t k, std::uint64_t first_step, std::span<double> out) const;

  /// Uniform in [0,1) for (k, i, j); shares the counter scheme.
  double uniform(std::uint64_t k, std::uint64_t i, std::uint64_t j) const;

  /// A stream with an independent key, e.g. one per optimisation pass.
  NoiseStream substream(std::uint64_t tag) const { return {derive_seed(seed_, tag), dim_}; }

 private:
  std::uint64_t seed_;
  Index dim_;
};

}  // namespace mppi
