#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "semitc/rng.hpp"

namespace semitc::fixtures {

/// Marks every index congruent to start modulo l, then keeps the first `window`.
inline std::vector<std::size_t> simulate_fixed(std::size_t l, std::size_t start, std::size_t n, std::size_t window) {
  std::vector<std::size_t> out;
  for (std::size_t i = start; i < n; ++i)
    if ((i - start) % l == 0 && out.size() < window) out.push_back(i);
  return out;
}

/// One Bernoulli(p) coin per scanned packet, scanning stops once the window is full.
inline std::vector<std::size_t> simulate_random(double p, std::size_t start, std::size_t n, std::size_t window,
                                                Rng& rng) {
  std::vector<std::size_t> out;
  std::size_t i = start;
  while (i < n && out.size() < window) {
    const bool keep = uniform01(rng) < p;
    if (keep) out.push_back(i);
    ++i;
  }
  return out;
}

/// Stage k (k = 0, 1, ...) covers samples k*beta .. k*beta+beta-1 and uses step l0 * alpha^k.
inline std::vector<std::size_t> simulate_incremental(std::size_t l0, double alpha, std::size_t beta,
                                                     std::size_t start, std::size_t n, std::size_t window) {
  std::vector<std::size_t> out;
  double x = static_cast<double>(start);
  double stage_step = static_cast<double>(l0);
  for (std::size_t sample = 0; sample < window; ++sample) {
    const double rounded = std::floor(x + 0.5);
    if (rounded >= static_cast<double>(n)) break;
    out.push_back(static_cast<std::size_t>(rounded));
    const std::size_t stage_of_next = (sample + 1) / beta;
    if (stage_of_next != sample / beta) stage_step = stage_step * alpha;
    x = x + stage_step;
  }
  return out;
}

}  // namespace semitc::fixtures
