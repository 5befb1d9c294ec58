#include "semitc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semitc/error.hpp"
#include "semitc/features.hpp"

namespace semitc {

namespace {

constexpr double kLengthLow = 120.0;
constexpr double kLengthHigh = 1300.0;
constexpr double kBaseStddev = 40.0;
constexpr double kSeparation = 2.0;  // ladder gap in component stddevs at difficulty 1
constexpr double kIatLogRange = 1.0;
// Per-flow session nuisance: log-IAT shift, length shift (in stddevs), switch jitter.
constexpr double kFlowIatShift = 0.7;
constexpr double kFlowLengthShift = 0.2;
constexpr double kFlowSwitchJitter = 0.15;
constexpr std::size_t kMotifLength = 24;

double sample_length(const std::vector<LengthComponent>& mixture, double shift, Rng& rng) {
  double u = uniform01(rng);
  const LengthComponent* c = &mixture.back();
  for (const auto& m : mixture) {
    if (u < m.weight) {
      c = &m;
      break;
    }
    u -= m.weight;
  }
  return std::round(std::clamp(normal(rng, c->mean + shift, c->stddev), kMinSynthLength, kMaxPacketLength));
}

std::vector<double> ladder(std::size_t k, double difficulty, double stddev, Rng& rng) {
  const double room = (kLengthHigh - kLengthLow) / static_cast<double>(std::max<std::size_t>(k - 1, 1));
  const double gap = std::min(kSeparation * stddev / difficulty, room);
  const double span = gap * static_cast<double>(k - 1);
  const double base = uniform(rng, kLengthLow, kLengthHigh - span);
  std::vector<double> means(k);
  for (std::size_t i = 0; i < k; ++i) means[i] = base + gap * static_cast<double>(i);
  shuffle(std::span<double>(means), rng);
  return means;
}

}  // namespace

double ClassProfile::mean_length(std::size_t direction) const {
  double m = 0.0;
  for (const auto& c : lengths.at(direction)) m += c.weight * c.mean;
  return m;
}

double ClassProfile::max_stddev() const {
  double s = 0.0;
  for (const auto& mix : lengths)
    for (const auto& c : mix) s = std::max(s, c.stddev);
  return s;
}

void SynthConfig::validate() const {
  if (num_classes < 2 || num_classes > 26) throw ConfigError("number of classes must be in [2, 26]");
  if (flows_per_class < 1) throw ConfigError("flows per class must be >= 1");
  if (!(difficulty > 0.0) || !std::isfinite(difficulty)) throw ConfigError("difficulty must be positive");
}

std::vector<ClassProfile> make_profiles(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "profiles"));
  const std::size_t k = cfg.num_classes;
  const double room = (kLengthHigh - kLengthLow) / static_cast<double>(k - 1);
  const double stddev = std::min(kBaseStddev, room / kSeparation);
  const auto fwd = ladder(k, cfg.difficulty, stddev, rng);
  const auto bwd = ladder(k, cfg.difficulty, stddev, rng);

  std::vector<double> iat_means(k);
  for (std::size_t i = 0; i < k; ++i)
    iat_means[i] = -6.0 + kIatLogRange * static_cast<double>(i) / static_cast<double>(k - 1);
  shuffle(std::span<double>(iat_means), rng);

  std::vector<ClassProfile> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& p = out[c];
    p.label = "c" + std::to_string(c);
    const std::array<double, 2> centers{fwd[c], bwd[c]};
    for (std::size_t d = 0; d < 2; ++d) {
      const double spread = uniform(rng, 1.0, 2.0) * stddev;
      const double w = uniform(rng, 0.3, 0.7);
      // Two components whose weighted mean is the ladder value.
      p.lengths[d] = {{w, centers[d] - spread * (1.0 - w), stddev}, {1.0 - w, centers[d] + spread * w, stddev}};
    }
    p.iat_log_mean = iat_means[c];
    p.iat_log_std = uniform(rng, 0.6, 1.0);
    p.switch_probability = uniform(rng, 0.2, 0.6);
    p.motif.resize(kMotifLength);
    const double motif_gap = std::exp(uniform(rng, -8.0, -5.0));
    for (std::size_t i = 0; i < kMotifLength; ++i) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      p.motif[i] = {sign * std::round(uniform(rng, kMinSynthLength, kMaxPacketLength)), motif_gap};
    }
    p.min_packets = 3000 + uniform_index(rng, 1000);
    p.max_packets = p.min_packets + 1000 + uniform_index(rng, 1000);
  }
  return out;
}

Flow generate_flow(const ClassProfile& profile, const std::string& id, Rng& rng) {
  const std::size_t n = profile.min_packets + uniform_index(rng, profile.max_packets - profile.min_packets + 1);
  const std::size_t motif_at =
      kMotifEarliestOffset + uniform_index(rng, n - profile.motif.size() - kMotifEarliestOffset + 1);

  Flow f;
  f.id = id;
  f.label = profile.label;
  const std::uint32_t host = 0x0A000000u | static_cast<std::uint32_t>(uniform_index(rng, 1u << 24));
  f.tuple = FiveTuple{host, 0xC0A80001u, static_cast<std::uint16_t>(1024 + uniform_index(rng, 60000)), 443,
                      Protocol::Udp};
  f.packets.reserve(n);

  // Class-agnostic handshake-like preamble.
  static constexpr std::array<double, kSynthPreambleLength> preamble{1350, -1250, 90,  -1250, -280, 70,
                                                                     -60,  120,   -90, 80,    -70,  60};
  double t = 0.0;
  for (std::size_t i = 0; i < kSynthPreambleLength && i < n; ++i) {
    if (i > 0) t += std::exp(normal(rng, -5.0, 0.5));
    f.packets.push_back({t, static_cast<int>(preamble[i])});
  }

  const double iat_shift = normal(rng, 0.0, kFlowIatShift);
  const double len_shift = normal(rng, 0.0, kFlowLengthShift) * profile.max_stddev();
  const double switch_p = std::clamp(profile.switch_probability + normal(rng, 0.0, kFlowSwitchJitter), 0.05, 0.95);
  bool forward = true;
  for (std::size_t i = f.packets.size(); i < n; ++i) {
    double len, gap;
    if (i >= motif_at && i < motif_at + profile.motif.size()) {
      const auto& m = profile.motif[i - motif_at];
      len = m.signed_length;
      gap = m.gap * uniform(rng, 0.8, 1.2);
    } else {
      if (uniform01(rng) < switch_p) forward = !forward;
      len = sample_length(profile.lengths[forward ? 0 : 1], len_shift, rng) * (forward ? 1.0 : -1.0);
      gap = lognormal(rng, profile.iat_log_mean + iat_shift, profile.iat_log_std);
    }
    t += std::max(gap, 1e-6);
    f.packets.push_back({t, static_cast<int>(len)});
  }
  return f;
}

std::vector<Flow> generate(const SynthConfig& cfg) {
  const auto profiles = make_profiles(cfg);
  std::vector<Flow> flows;
  flows.reserve(cfg.num_classes * cfg.flows_per_class);
  for (std::size_t i = 0; i < cfg.flows_per_class; ++i) {
    for (const auto& p : profiles) {
      const std::string id = p.label + "-" + std::to_string(i);
      Rng rng(derive_seed(cfg.seed, id));
      flows.push_back(generate_flow(p, id, rng));
    }
  }
  return flows;
}

}  // namespace semitc
