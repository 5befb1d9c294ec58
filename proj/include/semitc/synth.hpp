#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semitc/flow.hpp"
#include "semitc/rng.hpp"

namespace semitc {

struct LengthComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
};

/// One motif step: signed length in bytes and the gap before it in seconds.
struct MotifStep {
  double signed_length = 0.0;
  double gap = 0.0;
};

/// Generative parameters of one class.
struct ClassProfile {
  std::string label;
  std::array<std::vector<LengthComponent>, 2> lengths;  // forward, backward mixtures
  double iat_log_mean = 0.0;
  double iat_log_std = 1.0;
  double switch_probability = 0.5;
  std::vector<MotifStep> motif;
  std::size_t min_packets = 100;
  std::size_t max_packets = 100;

  /// Mixture mean of the forward (0) or backward (1) packet lengths.
  double mean_length(std::size_t direction) const;
  /// Largest component standard deviation over both directions.
  double max_stddev() const;
};

struct SynthConfig {
  std::size_t num_classes = 5;
  std::size_t flows_per_class = 120;
  std::uint64_t seed = 0;
  /// Inter-class separation of the length means is divided by this.
  double difficulty = 1.0;

  void validate() const;
};

inline constexpr double kMinSynthLength = 40.0;
inline constexpr std::size_t kSynthPreambleLength = 12;
inline constexpr std::size_t kMotifEarliestOffset = 200;

std::vector<ClassProfile> make_profiles(const SynthConfig& cfg);

/// One flow of the given class. Times strictly increase; lengths are clamped to
/// [40, 1434]; the first packet is forward.
Flow generate_flow(const ClassProfile& profile, const std::string& id, Rng& rng);

/// flows_per_class flows for each class "c0", "c1", ..., interleaved by class.
std::vector<Flow> generate(const SynthConfig& cfg);

}  // namespace semitc
