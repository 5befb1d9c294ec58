#include "semitc/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "semitc/error.hpp"

namespace semitc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

}  // namespace

void validate(const SamplingSpec& spec) {
  std::visit(overloaded{
                 [](const FixedStep& s) {
                   if (s.step < 1) throw ConfigError("fixed step must be >= 1");
                 },
                 [](const RandomSampling& s) {
                   if (!(s.probability > 0.0 && s.probability <= 1.0))
                     throw ConfigError("random sampling probability must be in (0, 1]");
                 },
                 [](const IncrementalStep& s) {
                   if (s.initial_step < 1) throw ConfigError("incremental initial step must be >= 1");
                   if (!(s.growth >= 1.0) || !std::isfinite(s.growth))
                     throw ConfigError("incremental growth factor must be >= 1");
                   if (s.per_stage < 1) throw ConfigError("incremental samples-per-stage must be >= 1");
                 },
             },
             spec);
}

std::string method_name(const SamplingSpec& spec) {
  return std::visit(overloaded{[](const FixedStep&) { return std::string("fixed"); },
                               [](const RandomSampling&) { return std::string("random"); },
                               [](const IncrementalStep&) { return std::string("incremental"); }},
                    spec);
}

SamplingSpec parse_sampling(const std::string& method, const std::string& params) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= params.size()) {
    const auto comma = std::min(params.find(',', pos), params.size());
    const std::string token = params.substr(pos, comma - pos);
    double v = 0.0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc{} || end != token.data() + token.size())
      throw ConfigError("invalid sampling parameter '" + token + "'");
    values.push_back(v);
    pos = comma + 1;
  }
  auto as_count = [](double v, const char* what) {
    if (v < 1.0 || v != std::floor(v)) throw ConfigError(std::string(what) + " must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  SamplingSpec spec;
  if (method == "fixed") {
    if (values.size() != 1) throw ConfigError("fixed sampling takes one parameter: l");
    spec = FixedStep{as_count(values[0], "fixed step")};
  } else if (method == "random") {
    if (values.size() != 1) throw ConfigError("random sampling takes one parameter: p");
    spec = RandomSampling{values[0]};
  } else if (method == "incremental") {
    if (values.size() != 3) throw ConfigError("incremental sampling takes three parameters: l0,alpha,beta");
    spec = IncrementalStep{as_count(values[0], "incremental l0"), values[1], as_count(values[2], "incremental beta")};
  } else {
    throw ConfigError("unknown sampling method '" + method + "' (expected fixed, random or incremental)");
  }
  validate(spec);
  return spec;
}

std::vector<std::size_t> sample_indices(const SamplingSpec& spec, std::size_t start, std::size_t flow_len,
                                        std::size_t window, Rng& rng) {
  if (start >= flow_len)
    throw DataError("sampling start " + std::to_string(start) + " is outside a flow of " +
                    std::to_string(flow_len) + " packets");
  if (window < 1) throw ConfigError("sampling window must be >= 1");
  validate(spec);
  std::vector<std::size_t> out;
  out.reserve(std::min(window, flow_len - start));
  std::visit(overloaded{
                 [&](const FixedStep& s) {
                   for (std::size_t i = start; i < flow_len && out.size() < window; i += s.step) out.push_back(i);
                 },
                 [&](const RandomSampling& s) {
                   for (std::size_t i = start; i < flow_len && out.size() < window; ++i)
                     if (uniform01(rng) < s.probability) out.push_back(i);
                 },
                 [&](const IncrementalStep& s) {
                   double position = static_cast<double>(start);
                   double step = static_cast<double>(s.initial_step);
                   while (out.size() < window) {
                     const std::size_t index = round_half_up(position);
                     if (index >= flow_len) break;
                     out.push_back(index);
                     if (out.size() % s.per_stage == 0) step *= s.growth;
                     position += step;
                   }
                 },
             },
             spec);
  return out;
}

std::optional<std::size_t> full_window_span(const SamplingSpec& spec, std::size_t window) {
  if (std::holds_alternative<RandomSampling>(spec)) return std::nullopt;
  Rng unused(0);
  const auto idx = sample_indices(spec, 0, std::numeric_limits<std::size_t>::max() / 2, window, unused);
  return idx.back() + 1;
}

std::vector<SampledFlow> augment(const Flow& flow, const SamplingSpec& spec, std::size_t window,
                                 std::size_t max_copies, Rng& rng) {
  if (max_copies < 1) throw ConfigError("max_copies must be >= 1");
  const std::size_t n = flow.packets.size();
  if (n == 0) return {};
  std::vector<SampledFlow> copies;
  auto emit = [&](std::size_t start) {
    copies.push_back({flow.id, sample_indices(spec, start, n, window, rng), window, flow.label});
  };

  if (std::holds_alternative<RandomSampling>(spec)) {
    for (std::size_t c = 0; c < max_copies; ++c) emit(0);
    return copies;
  }
  const std::size_t span = *full_window_span(spec, window);
  if (span > n) {
    emit(0);
    return copies;
  }
  const std::size_t delta = std::max<std::size_t>(1, (n - span) / max_copies);
  for (std::size_t start = 0; start + span <= n && copies.size() < max_copies; start += delta) emit(start);
  return copies;
}

void write_sampled(std::ostream& out, const std::vector<SampledFlow>& samples, const std::vector<Flow>& sources) {
  std::unordered_map<std::string, const Flow*> by_id;
  for (const auto& f : sources) by_id.emplace(f.id, &f);
  for (const auto& s : samples) {
    auto it = by_id.find(s.flow_id);
    if (it == by_id.end()) throw DataError("sampled flow refers to unknown flow '" + s.flow_id + "'");
    nlohmann::json pkts = nlohmann::json::array();
    for (auto i : s.indices) {
      if (i >= it->second->packets.size()) throw DataError("sample index out of range for '" + s.flow_id + "'");
      const auto& p = it->second->packets[i];
      pkts.push_back(nlohmann::json::array({p.rel_time, p.signed_length}));
    }
    nlohmann::json j{{"flow_id", s.flow_id},
                     {"label", s.label ? nlohmann::json(*s.label) : nlohmann::json(nullptr)},
                     {"indices", s.indices},
                     {"window", s.window},
                     {"pkts", std::move(pkts)}};
    out << j.dump() << '\n';
  }
}

}  // namespace semitc
