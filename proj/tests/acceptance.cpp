#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "../tools/cli.hpp"
#include "adam_oracle.hpp"
#include "ingest_fixture.hpp"
#include "sampling_oracle.hpp"
#include "semitc/error.hpp"
#include "semitc/ingest.hpp"
#include "semitc/nn/gradcheck.hpp"
#include "semitc/nn/network.hpp"
#include "semitc/pipeline.hpp"
#include "semitc/synth.hpp"
#include "stats_oracle.hpp"

using namespace semitc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome gradcheck_suite() {
  const auto t0 = Clock::now();
  nn::GradCheckOptions opts;
  opts.seeds = 10;
  const auto results = nn::run_gradcheck_suite(opts);
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 60.0 && results.size() >= 9;
  double worst = 0.0;
  std::string failed;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_relative_error);
    const bool good = r.passed && r.seeds >= 10 && r.max_relative_error < 1e-4;
    if (!good) failed += " " + r.name;
    ok = ok && good;
  }
  return {ok, fmt("%zu ops x 10 seeds, max rel err %.2e, %.1f s%s", results.size(), worst, elapsed,
                  failed.empty() ? "" : (" failed:" + failed).c_str())};
}

Outcome stats_oracle() {
  Rng rng(2718);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int kind = i % 10 == 0 ? 1 : i % 10 == 1 ? 2 : i % 10 == 2 ? 3 : 0;
    const Flow f = fixtures::random_stats_flow(rng, kind);
    const auto got = stat_features(f);
    const auto want = fixtures::brute_force_stats(f);
    for (std::size_t k = 0; k < kNumStatFeatures; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  return {worst <= 1e-12, fmt("100 flows incl. forward-only and single-packet, max abs diff %.1e", worst)};
}

Outcome sampling_oracle() {
  Rng gen(314159);
  std::size_t mismatches = 0, alpha_one = 0, p_one = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(gen, 3000);
    const std::size_t start = uniform_index(gen, n);
    const std::size_t window = 1 + uniform_index(gen, 100);
    const std::size_t l = 1 + uniform_index(gen, 40);
    const double p = 0.01 + 0.99 * uniform01(gen);
    const IncrementalStep inc{1 + uniform_index(gen, 30), 1.0 + 1.5 * uniform01(gen), 1 + uniform_index(gen, 15)};

    Rng unused(0), lib_rng(trial), oracle_rng(trial);
    const auto fixed = sample_indices(FixedStep{l}, start, n, window, unused);
    mismatches += fixed != fixtures::simulate_fixed(l, start, n, window);
    mismatches += sample_indices(RandomSampling{p}, start, n, window, lib_rng) !=
                  fixtures::simulate_random(p, start, n, window, oracle_rng);
    mismatches += sample_indices(inc, start, n, window, unused) !=
                  fixtures::simulate_incremental(inc.initial_step, inc.growth, inc.per_stage, start, n, window);
    alpha_one += sample_indices(IncrementalStep{l, 1.0, inc.per_stage}, start, n, window, unused) != fixed;
    p_one += sample_indices(RandomSampling{1.0}, start, n, window, lib_rng) !=
             sample_indices(FixedStep{1}, start, n, window, unused);
  }
  return {mismatches == 0 && alpha_one == 0 && p_one == 0,
          fmt("1000 tuples: %zu oracle mismatches, %zu alpha=1 vs fixed, %zu p=1 vs l=1", mismatches, alpha_one,
              p_one)};
}

Outcome adam_oracle() {
  nn::Parameter theta("theta", {1});
  theta.value[0] = 1.0;
  std::uint64_t step = 0;
  nn::Parameter* params[] = {&theta};
  const auto want = fixtures::scalar_adam(1.0, 0.1, 10);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    theta.grad[0] = 2 * theta.value[0];
    nn::adam_step(params, step, {0.1});
    worst = std::max(worst, std::abs(theta.value[0] - want[t]));
  }
  double worst_first = 0.0;
  for (double g : {1e-4, 0.3, 2.0, -50.0}) {
    nn::Parameter w("w", {1});
    w.grad[0] = g;
    std::uint64_t s = 0;
    nn::Parameter* ps[] = {&w};
    nn::adam_step(ps, s, {1e-3});
    const double expected = 1e-3 * std::abs(g) / (std::abs(g) + 1e-8);
    worst_first = std::max(worst_first, std::abs(std::abs(w.value[0]) - expected) / expected);
  }
  return {worst <= 1e-12 && worst_first <= 1e-9,
          fmt("10-step max diff %.1e, first-step rel err %.1e", worst, worst_first)};
}

Outcome shape_ledger() {
  const auto reg = nn::check_architecture(nn::regressor_spec(45));
  const auto cls = nn::check_architecture(nn::classifier_spec(5, 45));
  std::vector<std::size_t> dense;
  for (const auto& [spec, shape] : reg.head)
    if (spec.kind == nn::LayerKind::Dense) dense.push_back(shape[0]);
  bool ok = reg.flatten_width() == 320 && dense == std::vector<std::size_t>{256, 128, 128, 24} &&
            cls.head.back().second == nn::Shape{5};

  std::size_t rejected = 0, tried = 0;
  auto expect_reject = [&](nn::NetworkSpec spec) {
    ++tried;
    try {
      nn::Network net(spec, 1);
    } catch (const Error&) {
      ++rejected;
    }
  };
  for (std::size_t i = 0; i < reg.trunk.size(); ++i) {
    auto spec = nn::regressor_spec();
    auto& layer = spec.trunk[i];
    if (layer.kind == nn::LayerKind::Conv1d) {
      layer.kernel += 2;
      expect_reject(spec);
      spec = nn::regressor_spec();
      spec.trunk[i].units *= 2;
      expect_reject(spec);
    } else if (layer.kind == nn::LayerKind::MaxPool1d) {
      layer.kernel = 2;
      expect_reject(spec);
    }
  }
  ok = ok && tried > 0 && rejected == tried;
  return {ok, fmt("flatten %zu, head 256/128/128/24 and K=5, %zu/%zu conv/pool deviations rejected",
                  reg.flatten_width(), rejected, tried)};
}

struct BenchmarkResult {
  std::vector<double> retrained, baseline, retrained_flow;
  double pretrain_loss_ratio = 0.0;
  double seconds = 0.0;
};

const BenchmarkResult& run_benchmark() {
  static const BenchmarkResult result = [] {
    BenchmarkResult r;
    const auto t0 = Clock::now();
    const auto flows = generate({5, 120, 7, 1.0});
    const auto classes = label_set(flows);

    TrainConfig pre_cfg;
    pre_cfg.seed = 1;
    pre_cfg.pretrain_epochs = 50;
    pre_cfg.copies = 8;
    auto unlabeled = split_per_class(flows, 100, 99).first;
    for (auto& f : unlabeled) f.label.reset();
    const Model pre = pretrain(unlabeled, pre_cfg);
    r.pretrain_loss_ratio = pre.history.epoch_loss.front() / pre.history.epoch_loss.back();

    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto [labeled, test] = split_per_class(flows, 20, 100 + s);
      TrainConfig cfg;
      cfg.seed = 200 + s;
      cfg.retrain_epochs = 20;
      cfg.copies = 10;
      const Model retrained = retrain(pre, labeled, classes, cfg);
      const Model baseline = train_supervised_baseline(labeled, classes, cfg);
      const auto er = evaluate(retrained, test, classes, cfg);
      const auto eb = evaluate(baseline, test, classes, cfg);
      r.retrained.push_back(er.copies.macro_accuracy);
      r.retrained_flow.push_back(er.flows.macro_accuracy);
      r.baseline.push_back(eb.copies.macro_accuracy);
      std::cout << fmt("  seed %llu: retrained %.4f (flow-level %.4f), baseline %.4f\n",
                       static_cast<unsigned long long>(s), er.copies.macro_accuracy, er.flows.macro_accuracy,
                       eb.copies.macro_accuracy)
                << std::flush;
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return result;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

Outcome benchmark() {
  const auto& r = run_benchmark();
  const double lo = *std::min_element(r.retrained.begin(), r.retrained.end());
  std::size_t wins = 0;
  for (std::size_t i = 0; i < r.retrained.size(); ++i) wins += r.retrained[i] > r.baseline[i];
  const bool a = lo >= 0.90;
  const bool b = wins >= 4;
  return {a && b,
          fmt("(a) retrained macro mean %.4f min %.4f %s; (b) beats baseline (mean %.4f) in %zu/5 seeds %s; "
              "pretrain loss fell %.0fx; %.0f s",
              mean(r.retrained), lo, a ? "ok" : "below 0.90", mean(r.baseline), wins, b ? "ok" : "below 4",
              r.pretrain_loss_ratio, r.seconds)};
}

Outcome knn_ceiling() {
  const auto flows = generate({5, 120, 7, 1.0});
  const auto classes = label_set(flows);
  const auto loo = knn_leave_one_out(flows, classes, 5);
  std::vector<double> split;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto [train, test] = split_per_class(flows, 20, 100 + s);
    split.push_back(evaluate_knn(train, test, classes, 5).flows.macro_accuracy);
  }
  return {loo.macro_accuracy >= 0.95,
          fmt("leave-one-out over 600 flows: %.4f; with 20 labeled flows/class: mean %.4f", loo.macro_accuracy,
              mean(split))};
}

struct CliRun {
  int code;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return {cli::run(args, out, err), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "semitc_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::ofstream(p("cfg.json")) << R"({"pretrain_epochs": 3, "retrain_epochs": 5, "copies": 6, "batch_size": 32})";
  const std::vector<std::string> artifacts{"flows.jsonl", "unlabeled.csv", "pre.ckpt", "cls.ckpt", "report.json",
                                           "knn.json"};

  auto run_once = [&]() -> std::pair<std::vector<std::string>, nlohmann::json> {
    const std::vector<std::vector<std::string>> steps{
        {"--seed", "11", "synth", "--classes", "3", "--flows-per-class", "30", "--out", p("flows.jsonl")},
        {"stats", "--flows", p("flows.jsonl"), "--out", p("unlabeled.csv")},
        {"--seed", "12", "--quiet", "pretrain", "--flows", p("flows.jsonl"), "--config", p("cfg.json"), "--out",
         p("pre.ckpt")},
        {"--seed", "13", "--quiet", "retrain", "--model", p("pre.ckpt"), "--flows", p("flows.jsonl"), "--out",
         p("cls.ckpt")},
        {"evaluate", "--model", p("cls.ckpt"), "--flows", p("flows.jsonl"), "--report", p("report.json")},
        {"baseline-knn", "--train", p("flows.jsonl"), "--test", p("flows.jsonl"), "--report", p("knn.json")},
    };
    for (const auto& s : steps) {
      const auto r = cli(s);
      if (r.code != 0) {
        std::string line;
        for (const auto& arg : s) line += " " + arg;
        throw Error("'semitc" + line + "' failed: " + r.err);
      }
    }
    std::vector<std::string> hashes;
    for (const auto& a : artifacts)
      hashes.push_back(read_json(p(a + ".manifest.json"))["outputs"][0]["sha256"].get<std::string>());
    return {hashes, read_json(p("report.json"))["flow_predictions"]};
  };

  const auto [h1, pred1] = run_once();
  const auto [h2, pred2] = run_once();
  fs::remove_all(dir);
  std::size_t same = 0;
  for (std::size_t i = 0; i < h1.size(); ++i) same += h1[i] == h2[i];
  const bool ok = same == h1.size() && pred1 == pred2 && !pred1.empty();
  return {ok, fmt("CLI pipeline twice: %zu/%zu manifest output hashes equal, %zu flow predictions %s", same,
                  h1.size(), pred1.size(), pred1 == pred2 ? "identical" : "differ")};
}

Outcome ingestion() {
  using fixtures::InterleavedCapture;
  const auto res = ingest_capture(parse_pcap(InterleavedCapture::pcap()), 60.0, 1);
  std::size_t total = 0;
  for (const auto& f : res.flows) total += f.size();
  const auto& expected = fixtures::interleaved_expected_flows();
  std::size_t matching = 0;
  for (std::size_t i = 0; i < std::min(expected.size(), res.flows.size()); ++i) {
    const auto& f = res.flows[i];
    const auto& e = expected[i];
    const auto init = InterleavedCapture::initiator(e.tuple);
    const std::size_t backward = std::count_if(f.packets.begin(), f.packets.end(),
                                               [](const PacketEvent& pk) { return pk.signed_length < 0; });
    const std::uint32_t first_src = e.starts_with_responder ? init.dst : init.src;
    matching += f.size() == e.packets && backward == e.backward && f.packets.front().signed_length == e.first_length &&
                f.packets.back().rel_time == e.last_rel_time && f.tuple.src_addr == first_src;
  }
  const bool ok = res.counters.decoded == 200 && total == res.counters.decoded &&
                  res.flows.size() == expected.size() && matching == expected.size();
  return {ok, fmt("decoded %zu, in flows %zu, %zu/%zu flows match fixture (direction + timeout split)",
                  res.counters.decoded, total, matching, expected.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient checks", gradcheck_suite},
      {"statistical-feature oracle", stats_oracle},
      {"sampling oracle", sampling_oracle},
      {"Adam oracle", adam_oracle},
      {"shape ledger", shape_ledger},
      {"synthetic semi-supervised benchmark", benchmark},
      {"KNN ceiling on statistics", knn_ceiling},
      {"end-to-end determinism", determinism},
      {"ingestion conservation", ingestion},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " - "
              << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
