#include "ragan/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ragan/errors.hpp"

namespace ragan {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw ContractError("Rng::index: empty range");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return draw % n;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                          std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ fnv1a64(name) ^ splitmix64(index + 1));
}

RngStreams seed_everything(std::uint64_t seed) {
  return RngStreams{
      Rng(derive_seed(seed, "init")),    Rng(derive_seed(seed, "messages")),
      Rng(derive_seed(seed, "channel")), Rng(derive_seed(seed, "latent")),
      Rng(derive_seed(seed, "rl-explore")), Rng(derive_seed(seed, "eval")),
  };
}

}  // namespace ragan
