#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "semitc/flow.hpp"
#include "semitc/rng.hpp"

namespace semitc::fixtures {

/// Straight-line recomputation of the 24 statistics, one (direction, quantity)
/// block at a time, without any of the library's helpers.
inline std::array<double, 24> brute_force_stats(const Flow& f) {
  std::array<double, 24> out{};
  for (int dir = 0; dir < 3; ++dir) {
    for (int qty = 0; qty < 2; ++qty) {
      std::vector<double> values(f.packets.size());
      int n = 0;
      double last_time = -1.0;
      bool seen = false;
      for (std::size_t i = 0; i < f.packets.size(); ++i) {
        const auto& p = f.packets[i];
        const bool in_dir = dir == 2 || (dir == 0 && p.signed_length > 0) || (dir == 1 && p.signed_length < 0);
        if (!in_dir) continue;
        if (qty == 0) {
          values[n++] = std::abs(p.signed_length);
        } else {
          if (seen) values[n++] = p.rel_time - last_time;
          last_time = p.rel_time;
          seen = true;
        }
      }
      double* block = &out[dir * 8 + qty * 4];
      if (n == 0) continue;
      double mn = values[0], mx = values[0], total = 0.0;
      for (int i = 0; i < n; ++i) {
        if (values[i] < mn) mn = values[i];
        if (values[i] > mx) mx = values[i];
        total += values[i];
      }
      const double mean = total / n;
      double ss = 0.0;
      for (int i = 0; i < n; ++i) ss += (values[i] - mean) * (values[i] - mean);
      block[0] = mn;
      block[1] = mx;
      block[2] = mean;
      block[3] = std::sqrt(ss / n);
    }
  }
  return out;
}

/// Seeded random flow; kind 0 mixed, 1 forward only, 2 single packet, 3 ends with the only backward packet.
inline Flow random_stats_flow(Rng& rng, int kind) {
  Flow f;
  f.id = "r";
  const std::size_t n = kind == 2 ? 1 : 2 + uniform_index(rng, 400);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) t += lognormal(rng, -3.0, 1.5);
    int len = 1 + static_cast<int>(uniform_index(rng, 1500));
    bool forward = i == 0 || kind == 1 || (kind == 0 && uniform01(rng) < 0.5);
    if (kind == 3) forward = i != n - 1;
    f.packets.push_back({t, forward ? len : -len});
  }
  return f;
}

}  // namespace semitc::fixtures
