#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "semitc/flow.hpp"
#include "semitc/sampling.hpp"

namespace semitc {

inline constexpr double kMaxPacketLength = 1434.0;  // bytes
inline constexpr double kMaxInterArrival = 1.0;     // seconds
inline constexpr std::size_t kNumStatFeatures = 24;
inline constexpr int kFeatureOrderVersion = 1;

enum class Direction : std::size_t { Forward = 0, Backward = 1, Both = 2 };
enum class Quantity : std::size_t { Length = 0, InterArrival = 1 };
enum class Statistic : std::size_t { Min = 0, Max = 1, Mean = 2, Std = 3 };

constexpr std::size_t stat_index(Direction d, Quantity q, Statistic s) {
  return static_cast<std::size_t>(d) * 8 + static_cast<std::size_t>(q) * 4 + static_cast<std::size_t>(s);
}

/// Flow-level statistics in canonical order: [fwd, bwd, both] x [len, iat] x
/// [min, max, mean, std]. Lengths in bytes, IATs in seconds.
using StatVector = std::array<double, kNumStatFeatures>;

/// Column names f_{dir}_{qty}_{stat} in canonical order.
const std::array<std::string, kNumStatFeatures>& stat_feature_names();

/// Throws DataError on an empty flow. Population standard deviation; IATs are
/// differenced inside each direction subset.
StatVector stat_features(const Flow& flow);

/// Lengths divided by 1434, IATs left in seconds. No clamping.
StatVector normalize_targets(const StatVector& s);

/// 2 x W network input. Channel 0 holds clamped IATs between consecutive sampled
/// packets, channel 1 holds signed lengths scaled to [-1, 1]. Slots past
/// valid_count are zero.
struct InputMatrix {
  std::size_t window = 0;
  std::size_t valid_count = 0;
  std::vector<double> values;  // row-major [2][window]

  double iat(std::size_t k) const { return values[k]; }
  double length(std::size_t k) const { return values[window + k]; }
};

InputMatrix input_matrix(const SampledFlow& sample, const Flow& source, std::size_t window);

/// CSV: flow_id,label then the 24 canonical columns.
void write_stats_csv(std::ostream& out, const std::vector<Flow>& flows);

}  // namespace semitc
