#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "semitc/error.hpp"
#include "semitc/features.hpp"
#include "semitc/ingest.hpp"
#include "semitc/manifest.hpp"
#include "semitc/nn/gradcheck.hpp"
#include "semitc/pipeline.hpp"
#include "semitc/sampling.hpp"
#include "semitc/synth.hpp"

namespace semitc::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool quiet = false;
};

struct Context {
  Globals globals;
  std::ostream& out;
  std::ostream& err;

  std::uint64_t require_seed(const std::string& command) const {
    if (!globals.seed) throw UsageError(command + " requires an explicit --seed");
    return *globals.seed;
  }
  void progress(const std::string& line) const {
    if (!globals.quiet) err << line << '\n';
  }
};

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw DataError("failed writing '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

RunManifest begin_manifest(const std::string& subcommand) {
  RunManifest m;
  m.subcommand = subcommand;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& artifact) {
  m.add_output(artifact);
  m.finished_at = utc_timestamp();
  write_manifest(artifact, m);
}

EpochCallback epoch_logger(const Context& ctx, const std::string& stage) {
  if (ctx.globals.quiet) return {};
  return [&ctx, stage](std::size_t epoch, double loss) {
    std::ostringstream line;
    line << stage << " epoch " << (epoch + 1) << " loss " << std::setprecision(6) << loss;
    ctx.err << line.str() << '\n';
  };
}

// --- subcommands ---

struct IngestArgs {
  std::string pcap, out, label;
  double timeout = 60.0;
  std::size_t min_packets = 100;
};

void cmd_ingest(const Context& ctx, const IngestArgs& a) {
  if (!(a.timeout > 0.0)) throw ConfigError("--timeout must be positive");
  auto manifest = begin_manifest("ingest");
  manifest.config = {{"timeout", a.timeout}, {"min_packets", a.min_packets}};
  const Capture capture = read_pcap_file(a.pcap);
  manifest.add_input(a.pcap);
  IngestResult r = ingest_capture(capture, a.timeout, a.min_packets);
  if (!a.label.empty())
    for (auto& f : r.flows) f.label = a.label;
  write_flows_file(a.out, r.flows);
  finish_manifest(manifest, a.out);
  const auto& c = r.counters;
  ctx.progress("packets " + std::to_string(capture.packets.size()) + ", decoded " + std::to_string(c.decoded) +
               ", skipped " + std::to_string(c.skipped()) + " (non-ipv4 " + std::to_string(c.non_ipv4) +
               ", non-tcp/udp " + std::to_string(c.non_tcp_udp) + ", malformed " + std::to_string(c.malformed) +
               ", fragment " + std::to_string(c.fragment) + ")");
  ctx.progress("flows assembled " + std::to_string(r.assembled) + ", kept " + std::to_string(r.flows.size()));
}

struct SynthArgs {
  std::size_t classes = 5, flows_per_class = 120;
  double difficulty = 1.0;
  std::string out;
};

void cmd_synth(const Context& ctx, const SynthArgs& a) {
  SynthConfig cfg{a.classes, a.flows_per_class, ctx.require_seed("synth"), a.difficulty};
  auto manifest = begin_manifest("synth");
  manifest.seed = cfg.seed;
  manifest.config = {{"classes", cfg.num_classes}, {"flows_per_class", cfg.flows_per_class},
                     {"difficulty", cfg.difficulty}};
  write_flows_file(a.out, generate(cfg));
  finish_manifest(manifest, a.out);
  ctx.progress("wrote " + std::to_string(cfg.num_classes * cfg.flows_per_class) + " flows to " + a.out);
}

struct StatsArgs {
  std::string flows, out;
};

void cmd_stats(const Context& ctx, const StatsArgs& a) {
  auto manifest = begin_manifest("stats");
  const auto flows = read_flows_file(a.flows);
  manifest.add_input(a.flows);
  std::ofstream f(a.out, std::ios::binary);
  if (!f) throw DataError("cannot open '" + a.out + "' for writing");
  write_stats_csv(f, flows);
  f.close();
  finish_manifest(manifest, a.out);
  ctx.progress("wrote statistics for " + std::to_string(flows.size()) + " flows");
}

struct SampleArgs {
  std::string flows, out, method = "incremental", params = "22,1.6,10";
  std::size_t window = 45, copies = 100;
};

void cmd_sample(const Context& ctx, const SampleArgs& a) {
  const std::uint64_t seed = ctx.require_seed("sample");
  const SamplingSpec spec = parse_sampling(a.method, a.params);
  if (a.window < 1 || a.copies < 1) throw ConfigError("--window and --copies must be >= 1");
  auto manifest = begin_manifest("sample");
  manifest.seed = seed;
  manifest.config = {{"sampling", to_json(spec)}, {"window", a.window}, {"copies", a.copies}};
  const auto flows = read_flows_file(a.flows);
  manifest.add_input(a.flows);
  std::ofstream f(a.out, std::ios::binary);
  if (!f) throw DataError("cannot open '" + a.out + "' for writing");
  std::size_t total = 0;
  for (const auto& flow : flows) {
    Rng rng(derive_seed(seed, flow.id));
    const auto copies = augment(flow, spec, a.window, a.copies, rng);
    write_sampled(f, copies, {flow});
    total += copies.size();
  }
  f.close();
  finish_manifest(manifest, a.out);
  ctx.progress("wrote " + std::to_string(total) + " sampled copies");
}

struct PretrainArgs {
  std::string flows, config, out;
};

TrainConfig load_config(const std::string& path, const Context& ctx, std::uint64_t seed) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : train_config_from_json(read_json_file(path));
  cfg.seed = seed;
  cfg.threads = ctx.globals.threads;
  cfg.validate();
  return cfg;
}

void cmd_pretrain(const Context& ctx, const PretrainArgs& a) {
  const TrainConfig cfg = load_config(a.config, ctx, ctx.require_seed("pretrain"));
  auto manifest = begin_manifest("pretrain");
  manifest.seed = cfg.seed;
  manifest.config = to_json(cfg);
  const auto flows = read_flows_file(a.flows);
  manifest.add_input(a.flows);
  if (!a.config.empty()) manifest.add_input(a.config);
  const Model model = pretrain(flows, cfg, epoch_logger(ctx, "pretrain"));
  save_model(a.out, model);
  finish_manifest(manifest, a.out);
  ctx.progress("final loss " + std::to_string(model.history.epoch_loss.back()));
}

struct RetrainArgs {
  std::string model, flows, classes, config, out;
  bool no_transfer = false, freeze_trunk = false;
};

void cmd_retrain(const Context& ctx, const RetrainArgs& a) {
  const std::uint64_t seed = ctx.require_seed("retrain");
  if (a.model.empty() && !a.no_transfer) throw UsageError("retrain needs --model unless --no-transfer is given");
  auto manifest = begin_manifest("retrain");
  std::optional<Model> pre;
  if (!a.model.empty()) {
    pre = load_model(a.model);
    manifest.add_input(a.model);
    if (pre->kind != Model::Kind::Regressor) throw ConfigError("'" + a.model + "' is not a pretrained regressor");
  }
  TrainConfig cfg = a.config.empty() && pre ? pre->config : load_config(a.config, ctx, seed);
  cfg.seed = seed;
  cfg.threads = ctx.globals.threads;
  if (a.freeze_trunk) cfg.freeze_trunk = true;
  cfg.validate();
  if (!a.config.empty()) manifest.add_input(a.config);

  const auto flows = read_flows_file(a.flows);
  manifest.add_input(a.flows);
  const auto classes = a.classes.empty() ? label_set(flows) : split_csv(a.classes);
  manifest.seed = seed;
  manifest.config = to_json(cfg);
  manifest.config["classes"] = classes;
  manifest.config["transfer"] = !a.no_transfer;

  const Model model = a.no_transfer ? train_supervised_baseline(flows, classes, cfg, epoch_logger(ctx, "retrain"))
                                    : retrain(*pre, flows, classes, cfg, epoch_logger(ctx, "retrain"));
  save_model(a.out, model);
  finish_manifest(manifest, a.out);
  ctx.progress("final loss " + std::to_string(model.history.epoch_loss.back()));
}

struct EvaluateArgs {
  std::string model, flows, report;
  std::size_t copies = 0;
};

json embedded_manifest(const RunManifest& m) {
  json j = m.to_json();
  j.erase("started_at");
  j.erase("finished_at");
  j.erase("outputs");
  return j;
}

void print_summary(const Context& ctx, const EvalReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  s << "macro accuracy " << r.copies.macro_accuracy << " over " << r.n_sampled << " sampled copies; flow-level "
    << r.flows.macro_accuracy << " over " << r.n_flows << " flows\n";
  s << std::left << std::setw(12) << "class" << std::right << std::setw(10) << "accuracy" << std::setw(10)
    << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1" << '\n';
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto& m = r.copies.per_class[c];
    s << std::left << std::setw(12) << r.classes[c] << std::right << std::setw(10) << m.accuracy << std::setw(10)
      << m.precision << std::setw(10) << m.recall << std::setw(10) << m.f1 << '\n';
  }
  ctx.out << s.str();
}

void cmd_evaluate(const Context& ctx, const EvaluateArgs& a) {
  auto manifest = begin_manifest("evaluate");
  const Model model = load_model(a.model);
  manifest.add_input(a.model);
  const auto flows = read_flows_file(a.flows);
  manifest.add_input(a.flows);
  TrainConfig cfg = model.config;
  if (a.copies > 0) cfg.copies = a.copies;
  if (ctx.globals.seed) cfg.seed = *ctx.globals.seed;
  cfg.threads = ctx.globals.threads;
  manifest.seed = cfg.seed;
  manifest.config = to_json(cfg);
  const EvalReport report = evaluate(model, flows, model.classes, cfg);
  print_summary(ctx, report);
  if (!a.report.empty()) {
    json j = to_json(report);
    j["manifest"] = embedded_manifest(manifest);
    write_text_file(a.report, j.dump(2) + "\n");
    finish_manifest(manifest, a.report);
  }
}

struct KnnArgs {
  std::string train, test, report;
  std::size_t k = 5;
};

void cmd_knn(const Context& ctx, const KnnArgs& a) {
  auto manifest = begin_manifest("baseline-knn");
  manifest.config = {{"k", a.k}};
  const auto train = read_flows_file(a.train);
  manifest.add_input(a.train);
  const auto test = read_flows_file(a.test);
  manifest.add_input(a.test);
  auto classes = label_set(train);
  for (const auto& c : label_set(test))
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  const EvalReport report = evaluate_knn(train, test, classes, a.k);
  print_summary(ctx, report);
  if (!a.report.empty()) {
    json j = to_json(report);
    j["manifest"] = embedded_manifest(manifest);
    write_text_file(a.report, j.dump(2) + "\n");
    finish_manifest(manifest, a.report);
  }
}

struct GradcheckArgs {
  std::size_t seeds = 10;
};

bool cmd_gradcheck(const Context& ctx, const GradcheckArgs& a) {
  nn::GradCheckOptions opt;
  opt.seeds = a.seeds;
  if (ctx.globals.seed) opt.base_seed = *ctx.globals.seed;
  const auto results = nn::run_gradcheck_suite(opt);
  std::ostringstream s;
  s << std::left << std::setw(24) << "check" << std::right << std::setw(7) << "seeds" << std::setw(8) << "coords"
    << std::setw(9) << "skipped" << std::setw(14) << "max rel err" << "  result\n";
  bool ok = true;
  for (const auto& r : results) {
    s << std::left << std::setw(24) << r.name << std::right << std::setw(7) << r.seeds << std::setw(8)
      << r.coordinates << std::setw(9) << r.skipped << std::setw(14) << std::scientific << std::setprecision(2)
      << r.max_relative_error << std::defaultfloat << "  " << (r.passed ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed;
  }
  ctx.out << s.str();
  return ok;
}

const CLI::App* deepest_parsed(const CLI::App& app) {
  for (const auto* sub : app.get_subcommands()) return deepest_parsed(*sub);
  return &app;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised traffic classification from sampled packet time series", "semitc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Context ctx{{}, out, err};
  auto& g = ctx.globals;
  app.add_option("--seed", g.seed, "Master seed (required for synth, sample, pretrain, retrain)");
  app.add_option("--threads", g.threads, "Worker threads for data preparation and evaluation (0 = auto)");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Assemble flows from a pcap capture");
  s_ingest->add_option("--pcap", ingest.pcap, "Input capture")->required();
  s_ingest->add_option("--out", ingest.out, "Output flow file (JSONL)")->required();
  s_ingest->add_option("--timeout", ingest.timeout, "Idle timeout in seconds")->capture_default_str();
  s_ingest->add_option("--min-packets", ingest.min_packets, "Drop flows shorter than this")->capture_default_str();
  s_ingest->add_option("--label", ingest.label, "Label to attach to every flow");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a labeled synthetic flow dataset");
  s_synth->add_option("--classes", synth.classes, "Number of classes (2-26)")->capture_default_str();
  s_synth->add_option("--flows-per-class", synth.flows_per_class, "Flows per class")->capture_default_str();
  s_synth->add_option("--difficulty", synth.difficulty, "Divides the inter-class separation")->capture_default_str();
  s_synth->add_option("--out", synth.out, "Output flow file (JSONL)")->required();

  StatsArgs stats;
  auto* s_stats = app.add_subcommand("stats", "Write the 24 flow statistics as CSV");
  s_stats->add_option("--flows", stats.flows, "Input flow file")->required();
  s_stats->add_option("--out", stats.out, "Output CSV")->required();

  SampleArgs sample;
  auto* s_sample = app.add_subcommand("sample", "Write sampled copies of each flow");
  s_sample->add_option("--flows", sample.flows, "Input flow file")->required();
  s_sample->add_option("--out", sample.out, "Output sampled-flow file (JSONL)")->required();
  s_sample->add_option("--method", sample.method, "fixed | random | incremental")
      ->check(CLI::IsMember({"fixed", "random", "incremental"}))
      ->capture_default_str();
  s_sample->add_option("--params", sample.params, "l | p | l0,alpha,beta")->capture_default_str();
  s_sample->add_option("--window", sample.window, "Packets per window")->capture_default_str();
  s_sample->add_option("--copies", sample.copies, "Copies per flow")->capture_default_str();

  PretrainArgs pre;
  auto* s_pre = app.add_subcommand("pretrain", "Pretrain the statistics regressor on unlabeled flows");
  s_pre->add_option("--flows", pre.flows, "Unlabeled flow file")->required();
  s_pre->add_option("--config", pre.config, "Training config (JSON)");
  s_pre->add_option("--out", pre.out, "Output checkpoint")->required();

  RetrainArgs re;
  auto* s_re = app.add_subcommand("retrain", "Train a classifier on labeled flows from a pretrained trunk");
  s_re->add_option("--model", re.model, "Pretrained checkpoint");
  s_re->add_option("--flows", re.flows, "Labeled flow file")->required();
  s_re->add_option("--classes", re.classes, "Ordered class list a,b,c (default: sorted labels)");
  s_re->add_option("--config", re.config, "Training config (JSON); defaults to the pretrained config");
  s_re->add_option("--out", re.out, "Output checkpoint")->required();
  s_re->add_flag("--no-transfer", re.no_transfer, "Train from a random initialization instead");
  s_re->add_flag("--freeze-trunk", re.freeze_trunk, "Keep the transferred trunk fixed");

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Score a classifier on labeled test flows");
  s_ev->add_option("--model", ev.model, "Classifier checkpoint")->required();
  s_ev->add_option("--flows", ev.flows, "Labeled test flow file")->required();
  s_ev->add_option("--report", ev.report, "Output report (JSON)");
  s_ev->add_option("--copies", ev.copies, "Override the sampled copies per flow");

  KnnArgs knn;
  auto* s_knn = app.add_subcommand("baseline-knn", "k-nearest-neighbor baseline on flow statistics");
  s_knn->add_option("--train", knn.train, "Labeled training flows")->required();
  s_knn->add_option("--test", knn.test, "Labeled test flows")->required();
  s_knn->add_option("--k", knn.k, "Neighbors")->capture_default_str()->check(CLI::PositiveNumber);
  s_knn->add_option("--report", knn.report, "Output report (JSON)");

  GradcheckArgs gc;
  auto* s_gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every layer");
  s_gc->add_option("--seeds", gc.seeds, "Random seeds per check")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << deepest_parsed(app)->help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << deepest_parsed(app)->help();
    return kUsage;
  }

  try {
    if (s_ingest->parsed()) cmd_ingest(ctx, ingest);
    else if (s_synth->parsed()) cmd_synth(ctx, synth);
    else if (s_stats->parsed()) cmd_stats(ctx, stats);
    else if (s_sample->parsed()) cmd_sample(ctx, sample);
    else if (s_pre->parsed()) cmd_pretrain(ctx, pre);
    else if (s_re->parsed()) cmd_retrain(ctx, re);
    else if (s_ev->parsed()) cmd_evaluate(ctx, ev);
    else if (s_knn->parsed()) cmd_knn(ctx, knn);
    else if (s_gc->parsed()) return cmd_gradcheck(ctx, gc) ? kOk : kDataError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << deepest_parsed(app)->help();
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace semitc::cli
