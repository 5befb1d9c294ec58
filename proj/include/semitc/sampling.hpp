#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "semitc/flow.hpp"
#include "semitc/rng.hpp"

namespace semitc {

/// Every l-th packet (index difference l).
struct FixedStep {
  std::size_t step = 22;
  friend bool operator==(const FixedStep&, const FixedStep&) = default;
};

/// Each packet independently with probability p.
struct RandomSampling {
  double probability = 1.0 / 22.0;
  friend bool operator==(const RandomSampling&, const RandomSampling&) = default;
};

/// Fixed-step sampling whose step is multiplied by growth after every
/// per_stage emitted samples.
struct IncrementalStep {
  std::size_t initial_step = 22;
  double growth = 1.6;
  std::size_t per_stage = 10;
  friend bool operator==(const IncrementalStep&, const IncrementalStep&) = default;
};

using SamplingSpec = std::variant<FixedStep, RandomSampling, IncrementalStep>;

/// Throws ConfigError when parameters are out of range.
void validate(const SamplingSpec& spec);

std::string method_name(const SamplingSpec& spec);

/// Builds a spec from a method name and a parameter string
/// ("22", "0.045", "22,1.6,10").
SamplingSpec parse_sampling(const std::string& method, const std::string& params);

struct SampledFlow {
  std::string flow_id;
  std::vector<std::size_t> indices;  // strictly increasing
  std::size_t window = 45;
  std::optional<std::string> label;

  friend bool operator==(const SampledFlow&, const SampledFlow&) = default;
};

/// Packet indices chosen by spec, starting at start, at most window of them.
/// rng is only consulted for RandomSampling. Throws DataError if start >= flow_len.
std::vector<std::size_t> sample_indices(const SamplingSpec& spec, std::size_t start, std::size_t flow_len,
                                        std::size_t window, Rng& rng);

/// Number of packets a full window spans from any start (last offset + 1).
/// Undefined (returns nullopt) for random sampling.
std::optional<std::size_t> full_window_span(const SamplingSpec& spec, std::size_t window);

/// Sampling as augmentation: up to max_copies sampled windows of one flow.
/// Random sampling restarts from packet 0 for every copy; the deterministic
/// methods use evenly spaced start offsets.
std::vector<SampledFlow> augment(const Flow& flow, const SamplingSpec& spec, std::size_t window,
                                 std::size_t max_copies, Rng& rng);

/// Sampled-flow file: one JSON object per line with flow_id, label, indices,
/// window and the realized pkts pairs.
void write_sampled(std::ostream& out, const std::vector<SampledFlow>& samples, const std::vector<Flow>& sources);

}  // namespace semitc
