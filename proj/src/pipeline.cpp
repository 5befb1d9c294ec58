#include "semitc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>

#include "semitc/error.hpp"
#include "semitc/parallel.hpp"

namespace semitc {

using nlohmann::json;

// --- configuration ---

void TrainConfig::validate() const {
  semitc::validate(sampling);
  if (window < 1) throw ConfigError("window must be >= 1");
  if (copies < 1) throw ConfigError("copies must be >= 1");
  if (pretrain_epochs < 1) throw ConfigError("pretrain_epochs must be >= 1");
  if (retrain_epochs < 1) throw ConfigError("retrain_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (labeled_flows_per_class < 1) throw ConfigError("labeled_flows_per_class must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
}

json to_json(const SamplingSpec& spec) {
  if (const auto* f = std::get_if<FixedStep>(&spec)) return {{"method", "fixed"}, {"l", f->step}};
  if (const auto* r = std::get_if<RandomSampling>(&spec)) return {{"method", "random"}, {"p", r->probability}};
  const auto& i = std::get<IncrementalStep>(spec);
  return {{"method", "incremental"}, {"l0", i.initial_step}, {"alpha", i.growth}, {"beta", i.per_stage}};
}

SamplingSpec sampling_from_json(const json& j) {
  const auto method = j.at("method").get<std::string>();
  SamplingSpec spec;
  if (method == "fixed")
    spec = FixedStep{j.at("l").get<std::size_t>()};
  else if (method == "random")
    spec = RandomSampling{j.at("p").get<double>()};
  else if (method == "incremental")
    spec = IncrementalStep{j.at("l0").get<std::size_t>(), j.at("alpha").get<double>(), j.at("beta").get<std::size_t>()};
  else
    throw ConfigError("unknown sampling method '" + method + "'");
  validate(spec);
  return spec;
}

json to_json(const TrainConfig& c) {
  return {{"sampling", to_json(c.sampling)},
          {"window", c.window},
          {"copies", c.copies},
          {"pretrain_epochs", c.pretrain_epochs},
          {"retrain_epochs", c.retrain_epochs},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"freeze_trunk", c.freeze_trunk},
          {"seed", c.seed},
          {"labeled_flows_per_class", c.labeled_flows_per_class}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"sampling", "window",     "copies",       "pretrain_epochs",
                                              "retrain_epochs", "lr",   "batch_size",   "freeze_trunk",
                                              "seed",      "labeled_flows_per_class", "threads"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  TrainConfig c;
  try {
    if (j.contains("sampling")) c.sampling = sampling_from_json(j.at("sampling"));
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("window", c.window);
    read("copies", c.copies);
    read("pretrain_epochs", c.pretrain_epochs);
    read("retrain_epochs", c.retrain_epochs);
    read("lr", c.lr);
    read("batch_size", c.batch_size);
    read("freeze_trunk", c.freeze_trunk);
    read("seed", c.seed);
    read("labeled_flows_per_class", c.labeled_flows_per_class);
    read("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

// --- datasets ---

namespace {

std::vector<std::vector<SampledFlow>> sample_all(const std::vector<Flow>& flows, const TrainConfig& cfg) {
  std::vector<std::vector<SampledFlow>> out(flows.size());
  parallel_blocks(flows.size(), cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(cfg.seed, flows[i].id));
      out[i] = augment(flows[i], cfg.sampling, cfg.window, cfg.copies, rng);
    }
  });
  return out;
}

template <class PerFlow>
Dataset build_set(const std::vector<Flow>& flows, const TrainConfig& cfg, PerFlow&& per_flow) {
  cfg.validate();
  const auto samples = sample_all(flows, cfg);
  Dataset d;
  d.window = cfg.window;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    for (const auto& s : samples[i]) {
      const auto m = input_matrix(s, flows[i], cfg.window);
      d.inputs.insert(d.inputs.end(), m.values.begin(), m.values.end());
      d.source.push_back(i);
      per_flow(d, i);
    }
  }
  return d;
}

std::unordered_map<std::string, std::size_t> class_index(const std::vector<std::string>& classes) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (!idx.emplace(classes[i], i).second) throw ConfigError("duplicate class '" + classes[i] + "'");
  return idx;
}

std::size_t label_of(const Flow& f, const std::unordered_map<std::string, std::size_t>& idx) {
  if (!f.label) throw DataError("flow '" + f.id + "' has no label");
  auto it = idx.find(*f.label);
  if (it == idx.end()) throw DataError("flow '" + f.id + "' has label '" + *f.label + "' not in the class list");
  return it->second;
}

}  // namespace

Dataset build_regression_set(const std::vector<Flow>& flows, const TrainConfig& cfg) {
  std::vector<StatVector> targets(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) targets[i] = normalize_targets(stat_features(flows[i]));
  return build_set(flows, cfg, [&](Dataset& d, std::size_t i) {
    d.targets.insert(d.targets.end(), targets[i].begin(), targets[i].end());
  });
}

Dataset build_classification_set(const std::vector<Flow>& flows, const std::vector<std::string>& classes,
                                 const TrainConfig& cfg) {
  const auto idx = class_index(classes);
  std::vector<std::size_t> labels(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) labels[i] = label_of(flows[i], idx);
  return build_set(flows, cfg, [&](Dataset& d, std::size_t i) { d.labels.push_back(labels[i]); });
}

// --- training ---

namespace {

enum class Objective { Regression, Classification };

TrainingHistory fit(nn::Network& net, const Dataset& data, Objective objective, std::size_t epochs,
                    const TrainConfig& cfg, std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  if (data.size() == 0) throw DataError("training set is empty");
  const std::size_t per_input = 2 * data.window;
  const std::size_t per_target = net.output_size();
  const nn::AdamConfig adam{cfg.lr};
  TrainingHistory history;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  net.set_mode(nn::Mode::Train);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(derive_seed(shuffle_seed, epoch));
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      nn::Tensor x({n, 2, data.window});
      for (std::size_t b = 0; b < n; ++b)
        std::copy_n(data.inputs.begin() + order[begin + b] * per_input, per_input, x.data.begin() + b * per_input);
      net.zero_grad();
      const nn::Tensor y = net.forward(x);
      nn::LossResult loss;
      if (objective == Objective::Regression) {
        nn::Tensor target({n, per_target});
        for (std::size_t b = 0; b < n; ++b)
          std::copy_n(data.targets.begin() + order[begin + b] * per_target, per_target,
                      target.data.begin() + b * per_target);
        loss = nn::mse_loss(y, target);
      } else {
        std::vector<std::size_t> labels(n);
        for (std::size_t b = 0; b < n; ++b) labels[b] = data.labels[order[begin + b]];
        loss = nn::cross_entropy_loss(y, labels);
      }
      net.backward(loss.grad);
      net.optimizer_step(adam);
      loss_sum += loss.loss * static_cast<double>(n);
    }
    history.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
    if (on_epoch) on_epoch(epoch, history.epoch_loss.back());
  }
  net.set_mode(nn::Mode::Eval);
  return history;
}

void check_coverage(const std::vector<Flow>& labeled, const std::vector<std::string>& classes) {
  if (classes.empty()) throw ConfigError("class list is empty");
  const auto idx = class_index(classes);
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& f : labeled) ++counts[label_of(f, idx)];
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (counts[c] == 0) throw DataError("class '" + classes[c] + "' has no labeled flows");
}

Model train_classifier(nn::Network net, bool transferred, const std::vector<Flow>& labeled,
                       const std::vector<std::string>& classes, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  check_coverage(labeled, classes);
  const Dataset data = build_classification_set(labeled, classes, cfg);
  Model m{Model::Kind::Classifier, std::move(net), cfg, classes, {}, transferred};
  m.history = fit(m.network, data, Objective::Classification, cfg.retrain_epochs, cfg,
                  derive_seed(cfg.seed, "retrain-shuffle"), on_epoch);
  return m;
}

}  // namespace

Model pretrain(const std::vector<Flow>& unlabeled, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (unlabeled.empty()) throw DataError("pretraining needs at least one flow");
  const Dataset data = build_regression_set(unlabeled, cfg);
  if (data.size() == 0) throw DataError("no flow could be sampled for pretraining");
  Model m{Model::Kind::Regressor, nn::Network(nn::regressor_spec(cfg.window), derive_seed(cfg.seed, "pretrain-init")),
          cfg, {}, {}, false};
  m.history = fit(m.network, data, Objective::Regression, cfg.pretrain_epochs, cfg,
                  derive_seed(cfg.seed, "pretrain-shuffle"), on_epoch);
  return m;
}

Model retrain(const Model& pretrained, const std::vector<Flow>& labeled, const std::vector<std::string>& classes,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (pretrained.config.window != cfg.window)
    throw ConfigError("retrain window " + std::to_string(cfg.window) + " differs from the pretrained window " +
                      std::to_string(pretrained.config.window));
  check_coverage(labeled, classes);
  nn::Network net(nn::classifier_spec(classes.size(), cfg.window), derive_seed(cfg.seed, "retrain-init"));
  nn::transfer_trunk(pretrained.network, net, cfg.freeze_trunk);
  return train_classifier(std::move(net), true, labeled, classes, cfg, on_epoch);
}

Model train_supervised_baseline(const std::vector<Flow>& labeled, const std::vector<std::string>& classes,
                                const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  check_coverage(labeled, classes);
  nn::Network net(nn::classifier_spec(classes.size(), cfg.window), derive_seed(cfg.seed, "retrain-init"));
  return train_classifier(std::move(net), false, labeled, classes, cfg, on_epoch);
}

// --- inference and evaluation ---

std::size_t majority_vote(const std::vector<std::size_t>& votes, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto v : votes) ++counts.at(v);
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

namespace {

std::vector<std::size_t> predict_copies(nn::Network& net, const Flow& flow, const TrainConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, flow.id));
  const auto copies = augment(flow, cfg.sampling, cfg.window, cfg.copies, rng);
  const std::size_t per_input = 2 * cfg.window;
  nn::Tensor x({copies.size(), 2, cfg.window});
  for (std::size_t c = 0; c < copies.size(); ++c) {
    const auto m = input_matrix(copies[c], flow, cfg.window);
    std::copy(m.values.begin(), m.values.end(), x.data.begin() + c * per_input);
  }
  net.set_mode(nn::Mode::Eval);
  const nn::Tensor logits = net.forward(x);
  const std::size_t k = logits.dim(1);
  std::vector<std::size_t> out(copies.size());
  for (std::size_t c = 0; c < copies.size(); ++c) {
    const double* row = logits.ptr() + c * k;
    out[c] = static_cast<std::size_t>(std::max_element(row, row + k) - row);
  }
  return out;
}

void require_classifier(const Model& model) {
  if (model.kind != Model::Kind::Classifier) throw ConfigError("model is a regressor, not a classifier");
}

}  // namespace

Classification classify(const Model& model, const Flow& flow, const TrainConfig& cfg) {
  require_classifier(model);
  nn::Network net = model.network;
  Classification c;
  c.per_copy = predict_copies(net, flow, cfg);
  c.class_index = majority_vote(c.per_copy, model.classes.size());
  return c;
}

ConfusionSummary summarize_confusion(std::vector<std::vector<std::size_t>> confusion) {
  ConfusionSummary s;
  const std::size_t k = confusion.size();
  s.confusion = std::move(confusion);
  for (const auto& row : s.confusion) s.total += std::accumulate(row.begin(), row.end(), std::size_t{0});
  s.per_class.resize(k);
  double recall_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(s.confusion[c][c]);
    double fn = 0.0, fp = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == c) continue;
      fn += static_cast<double>(s.confusion[c][j]);
      fp += static_cast<double>(s.confusion[j][c]);
    }
    const double total = static_cast<double>(s.total);
    auto& m = s.per_class[c];
    m.accuracy = total > 0 ? (total - fn - fp) / total : 0.0;
    m.undefined_precision = tp + fp == 0.0;
    m.undefined_recall = tp + fn == 0.0;
    m.precision = m.undefined_precision ? 0.0 : tp / (tp + fp);
    m.recall = m.undefined_recall ? 0.0 : tp / (tp + fn);
    m.undefined_f1 = m.precision + m.recall == 0.0;
    m.f1 = m.undefined_f1 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    recall_sum += m.recall;
  }
  s.macro_accuracy = k > 0 ? recall_sum / static_cast<double>(k) : 0.0;
  return s;
}

EvalReport evaluate(const Model& model, const std::vector<Flow>& test_flows, const std::vector<std::string>& classes,
                    const TrainConfig& cfg) {
  require_classifier(model);
  if (test_flows.empty()) throw DataError("evaluation set is empty");
  if (classes != model.classes) throw ConfigError("class list differs from the classes the model was trained on");
  const auto idx = class_index(classes);
  std::vector<std::size_t> truth(test_flows.size());
  for (std::size_t i = 0; i < test_flows.size(); ++i) truth[i] = label_of(test_flows[i], idx);

  std::vector<std::vector<std::size_t>> predictions(test_flows.size());
  parallel_blocks(test_flows.size(), cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    nn::Network net = model.network;
    for (std::size_t i = begin; i < end; ++i) predictions[i] = predict_copies(net, test_flows[i], cfg);
  });

  const std::size_t k = classes.size();
  std::vector<std::vector<std::size_t>> copy_conf(k, std::vector<std::size_t>(k, 0)), flow_conf = copy_conf;
  EvalReport report;
  report.classes = classes;
  for (std::size_t i = 0; i < test_flows.size(); ++i) {
    for (auto p : predictions[i]) ++copy_conf[truth[i]][p];
    const auto vote = majority_vote(predictions[i], k);
    ++flow_conf[truth[i]][vote];
    report.flow_predictions.emplace_back(test_flows[i].id, vote);
    report.n_sampled += predictions[i].size();
  }
  report.n_flows = test_flows.size();
  report.copies = summarize_confusion(std::move(copy_conf));
  report.flows = summarize_confusion(std::move(flow_conf));
  return report;
}

namespace {

json summary_json(const ConfusionSummary& s, const std::vector<std::string>& classes) {
  json per_class = json::object();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& m = s.per_class[c];
    json undefined = json::array();
    if (m.undefined_precision) undefined.push_back("precision");
    if (m.undefined_recall) undefined.push_back("recall");
    if (m.undefined_f1) undefined.push_back("f1");
    per_class[classes[c]] = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
                             {"f1", m.f1},             {"undefined", undefined}};
  }
  return {{"macro_accuracy", s.macro_accuracy}, {"per_class", per_class}, {"confusion", s.confusion}, {"total", s.total}};
}

}  // namespace

json to_json(const EvalReport& r) {
  json preds = json::array();
  for (const auto& [id, c] : r.flow_predictions) preds.push_back({{"flow_id", id}, {"predicted", r.classes[c]}});
  json out = summary_json(r.copies, r.classes);
  out["classes"] = r.classes;
  out["n_sampled"] = r.n_sampled;
  out["n_flows"] = r.n_flows;
  out["flow_level"] = summary_json(r.flows, r.classes);
  out["flow_predictions"] = std::move(preds);
  return out;
}

// --- splitting ---

std::vector<std::string> label_set(const std::vector<Flow>& flows) {
  std::set<std::string> labels;
  for (const auto& f : flows) {
    if (!f.label) throw DataError("flow '" + f.id + "' has no label");
    labels.insert(*f.label);
  }
  return {labels.begin(), labels.end()};
}

std::pair<std::vector<Flow>, std::vector<Flow>> split_per_class(const std::vector<Flow>& flows, std::size_t n_train,
                                                                std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (!flows[i].label) throw DataError("flow '" + flows[i].id + "' has no label");
    by_class[*flows[i].label].push_back(i);
  }
  std::vector<bool> in_train(flows.size(), false);
  for (auto& [label, members] : by_class) {
    if (n_train > 0 && members.size() <= n_train)
      throw DataError("class '" + label + "' has " + std::to_string(members.size()) + " flows; need more than " +
                      std::to_string(n_train) + " to split");
    Rng rng(derive_seed(seed, label));
    for (std::size_t i = 0; i < n_train; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, members.size() - i));
      std::swap(members[i], members[j]);
      in_train[members[i]] = true;
    }
  }
  std::pair<std::vector<Flow>, std::vector<Flow>> out;
  for (std::size_t i = 0; i < flows.size(); ++i) (in_train[i] ? out.first : out.second).push_back(flows[i]);
  return out;
}

// --- KNN baseline ---

KnnClassifier::KnnClassifier(std::size_t k) : k_(k) {
  if (k == 0) throw ConfigError("k must be >= 1");
}

void KnnClassifier::add(const StatVector& normalized, std::size_t label) {
  points_.push_back(normalized);
  labels_.push_back(label);
}

std::size_t KnnClassifier::predict(const StatVector& q) const { return vote(q, SIZE_MAX); }

std::size_t KnnClassifier::predict_excluding(const StatVector& q, std::size_t exclude) const {
  return vote(q, exclude);
}

std::size_t KnnClassifier::vote(const StatVector& q, std::size_t exclude) const {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i == exclude) continue;
    double d = 0.0;
    for (std::size_t j = 0; j < kNumStatFeatures; ++j) d += (points_[i][j] - q[j]) * (points_[i][j] - q[j]);
    dist.emplace_back(d, i);
  }
  if (dist.empty()) throw DataError("KNN has no training points");
  const std::size_t k = std::min(k_, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t i = 0; i < k; ++i) ++counts[labels_[dist[i].second]];
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) best_count = std::max(best_count, count);
  for (std::size_t i = 0; i < k; ++i)
    if (counts[labels_[dist[i].second]] == best_count) return labels_[dist[i].second];
  return labels_[dist.front().second];
}

KnnClassifier knn_baseline(const std::vector<std::pair<StatVector, std::size_t>>& train, std::size_t k) {
  KnnClassifier knn(k);
  for (const auto& [s, label] : train) knn.add(s, label);
  return knn;
}

EvalReport evaluate_knn(const std::vector<Flow>& train, const std::vector<Flow>& test,
                        const std::vector<std::string>& classes, std::size_t k) {
  if (test.empty()) throw DataError("evaluation set is empty");
  const auto idx = class_index(classes);
  KnnClassifier knn(k);
  for (const auto& f : train) knn.add(normalize_targets(stat_features(f)), label_of(f, idx));
  std::vector<std::vector<std::size_t>> conf(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  EvalReport r;
  r.classes = classes;
  for (const auto& f : test) {
    const auto p = knn.predict(normalize_targets(stat_features(f)));
    ++conf[label_of(f, idx)][p];
    r.flow_predictions.emplace_back(f.id, p);
  }
  r.n_flows = r.n_sampled = test.size();
  r.copies = summarize_confusion(conf);
  r.flows = summarize_confusion(std::move(conf));
  return r;
}

ConfusionSummary knn_leave_one_out(const std::vector<Flow>& flows, const std::vector<std::string>& classes,
                                   std::size_t k) {
  const auto idx = class_index(classes);
  KnnClassifier knn(k);
  std::vector<StatVector> stats;
  for (const auto& f : flows) {
    stats.push_back(normalize_targets(stat_features(f)));
    knn.add(stats.back(), label_of(f, idx));
  }
  std::vector<std::vector<std::size_t>> conf(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  for (std::size_t i = 0; i < flows.size(); ++i) ++conf[label_of(flows[i], idx)][knn.predict_excluding(stats[i], i)];
  return summarize_confusion(std::move(conf));
}

// --- checkpoints ---

json model_to_json(const Model& m) {
  return {{"schema", "semitc.checkpoint"},
          {"v", kCheckpointVersion},
          {"kind", m.kind == Model::Kind::Regressor ? "regressor" : "classifier"},
          {"feature_order_version", kFeatureOrderVersion},
          {"feature_names", stat_feature_names()},
          {"config", to_json(m.config)},
          {"classes", m.classes},
          {"transferred", m.transferred},
          {"loss_history", m.history.epoch_loss},
          {"network", m.network.to_json()}};
}

Model model_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != "semitc.checkpoint") throw DataError("not a semitc checkpoint");
    const auto v = j.at("v").get<int>();
    if (v != kCheckpointVersion) throw VersionError("unsupported checkpoint version " + std::to_string(v));
    if (j.at("feature_order_version").get<int>() != kFeatureOrderVersion)
      throw VersionError("checkpoint uses a different statistic feature order");
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "regressor" && kind != "classifier") throw DataError("unknown model kind '" + kind + "'");
    Model m{kind == "regressor" ? Model::Kind::Regressor : Model::Kind::Classifier,
            nn::Network::from_json(j.at("network")),
            train_config_from_json(j.at("config")),
            j.at("classes").get<std::vector<std::string>>(),
            {j.at("loss_history").get<std::vector<double>>()},
            j.at("transferred").get<bool>()};
    if (m.kind == Model::Kind::Classifier && m.network.output_size() != m.classes.size())
      throw DataError("classifier output size does not match its class list");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << model_to_json(model).dump() << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace semitc
