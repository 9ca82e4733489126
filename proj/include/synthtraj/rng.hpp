#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace synthtraj {

/// Deterministic random source.
///
/// xoshiro256** seeded through splitmix64. All draws use fixed bit-level
/// formulas (no std:: distributions), so a seed yields identical values on
/// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent sub-stream derived from a parent seed and a stream name,
  /// e.g. Rng::stream(seed, "scene").
  static Rng stream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  /// Triangular distribution on [lo, hi] with the given mode.
  double triangular(double lo, double mode, double hi);
  /// Index drawn proportionally to non-negative weights. Weights must not all be zero.
  std::size_t weighted_index(std::span<const double> weights);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over a string, used to name sub-streams.
std::uint64_t hash_name(std::string_view name);

/// Mixes a base seed with an index; used for per-sample and per-request seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace synthtraj
