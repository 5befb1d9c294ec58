#include "semitc/features.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "semitc/error.hpp"

namespace semitc {

namespace {

// Writes min/max/mean/std of values into out[0..4); all zeros when empty.
void summarize(const std::vector<double>& values, double* out) {
  if (values.empty()) {
    std::fill(out, out + 4, 0.0);
    return;
  }
  double lo = values.front(), hi = values.front(), sum = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  out[0] = lo;
  out[1] = hi;
  out[2] = std::clamp(mean, lo, hi);
  out[3] = std::sqrt(sq / static_cast<double>(values.size()));
}

}  // namespace

const std::array<std::string, kNumStatFeatures>& stat_feature_names() {
  static const auto names = [] {
    std::array<std::string, kNumStatFeatures> n;
    const char* dirs[] = {"fwd", "bwd", "both"};
    const char* qtys[] = {"len", "iat"};
    const char* stats[] = {"min", "max", "mean", "std"};
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t q = 0; q < 2; ++q)
        for (std::size_t s = 0; s < 4; ++s)
          n[d * 8 + q * 4 + s] = std::string("f_") + dirs[d] + "_" + qtys[q] + "_" + stats[s];
    return n;
  }();
  return names;
}

StatVector stat_features(const Flow& flow) {
  if (flow.packets.empty()) throw DataError("cannot compute statistics of empty flow '" + flow.id + "'");
  StatVector out{};
  for (std::size_t d = 0; d < 3; ++d) {
    const auto dir = static_cast<Direction>(d);
    std::vector<double> lengths, iats;
    double prev_time = 0.0;
    bool have_prev = false;
    for (const auto& p : flow.packets) {
      const bool keep = dir == Direction::Both || (dir == Direction::Forward) == (p.signed_length > 0);
      if (!keep) continue;
      lengths.push_back(std::abs(static_cast<double>(p.signed_length)));
      if (have_prev) iats.push_back(p.rel_time - prev_time);
      prev_time = p.rel_time;
      have_prev = true;
    }
    summarize(lengths, &out[stat_index(dir, Quantity::Length, Statistic::Min)]);
    summarize(iats, &out[stat_index(dir, Quantity::InterArrival, Statistic::Min)]);
  }
  return out;
}

StatVector normalize_targets(const StatVector& s) {
  StatVector out = s;
  for (std::size_t d = 0; d < 3; ++d)
    for (std::size_t k = 0; k < 4; ++k) {
      out[d * 8 + k] = s[d * 8 + k] / kMaxPacketLength;
      out[d * 8 + 4 + k] = s[d * 8 + 4 + k] / kMaxInterArrival;
    }
  return out;
}

InputMatrix input_matrix(const SampledFlow& sample, const Flow& source, std::size_t window) {
  if (sample.indices.size() > window)
    throw DataError("sampled flow '" + sample.flow_id + "' has more indices than the window");
  InputMatrix m;
  m.window = window;
  m.valid_count = sample.indices.size();
  m.values.assign(2 * window, 0.0);
  for (std::size_t k = 0; k < sample.indices.size(); ++k) {
    const std::size_t j = sample.indices[k];
    if (j >= source.packets.size() || (k > 0 && j <= sample.indices[k - 1]))
      throw DataError("sampled flow '" + sample.flow_id + "' is inconsistent with its source flow");
    const auto& p = source.packets[j];
    if (k > 0) {
      const double gap = p.rel_time - source.packets[sample.indices[k - 1]].rel_time;
      m.values[k] = std::clamp(gap / kMaxInterArrival, 0.0, 1.0);
    }
    m.values[window + k] = std::clamp(static_cast<double>(p.signed_length) / kMaxPacketLength, -1.0, 1.0);
  }
  return m;
}

void write_stats_csv(std::ostream& out, const std::vector<Flow>& flows) {
  out << "flow_id,label";
  for (const auto& n : stat_feature_names()) out << ',' << n;
  out << '\n';
  auto quoted = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  out << std::setprecision(17);
  for (const auto& f : flows) {
    const auto s = stat_features(f);
    out << quoted(f.id) << ',' << (f.label ? quoted(*f.label) : std::string());
    for (double v : s) out << ',' << v;
    out << '\n';
  }
}

}  // namespace semitc
