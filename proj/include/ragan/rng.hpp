#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace ragan {

/// Pseudo-random source with machine-independent output: std::mt19937_64
/// with uniform, Box-Muller normal and rejection-sampled index transforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the named stream `name` (optionally sub-indexed) under `master`.
///
/// seed = splitmix64(splitmix64(master) ^ fnv1a64(name) ^ splitmix64(index + 1))
/// with fnv1a64 the 64-bit FNV-1a hash of the name's bytes.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                          std::uint64_t index = 0);

/// The run-scoped streams used by one training run.
struct RngStreams {
  Rng init;
  Rng messages;
  Rng channel;
  Rng latent;
  Rng explore;
  Rng eval;
};

RngStreams seed_everything(std::uint64_t seed);

}  // namespace ragan
