#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "ragan/nn.hpp"
#include "ragan/rng.hpp"

namespace ragan::test {

// Largest relative error between the store's current gradient slots and
// central differences of `loss` at `coords` random coordinates.
inline double fd_check(nn::ParamStore& store, const std::function<double()>& loss,
                       std::size_t coords, std::uint64_t seed) {
  loss();
  const nn::Vector analytic = store.flatten_grad();
  nn::Vector theta = store.flatten();
  Rng pick(seed);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < coords; ++k) {
    const auto i = static_cast<nn::Index>(pick.index(static_cast<std::uint64_t>(theta.size())));
    const double saved = theta[i];
    theta[i] = saved + h;
    store.assign(theta);
    const double up = loss();
    theta[i] = saved - h;
    store.assign(theta);
    const double down = loss();
    theta[i] = saved;
    store.assign(theta);
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace ragan::test
