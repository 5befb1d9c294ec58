#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semitc/features.hpp"
#include "semitc/flow.hpp"
#include "semitc/nn/network.hpp"
#include "semitc/sampling.hpp"

namespace semitc {

struct TrainConfig {
  SamplingSpec sampling = IncrementalStep{22, 1.6, 10};
  std::size_t window = 45;
  std::size_t copies = 100;
  std::size_t pretrain_epochs = 300;
  std::size_t retrain_epochs = 100;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  bool freeze_trunk = false;
  std::uint64_t seed = 0;
  std::size_t labeled_flows_per_class = 20;
  /// Worker threads for data preparation and evaluation (0 = hardware concurrency).
  std::size_t threads = 1;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SamplingSpec& spec);
SamplingSpec sampling_from_json(const nlohmann::json& j);

/// Network input batch and per-example targets for one training stage.
struct Dataset {
  std::size_t window = 0;
  std::vector<double> inputs;      // count x 2 x window
  std::vector<double> targets;     // count x 24 (regression)
  std::vector<std::size_t> labels; // count (classification)
  std::vector<std::size_t> source; // index of the source flow per example

  std::size_t size() const { return source.size(); }
};

/// Sampled copies of each flow (augmentation seeded per flow id) rendered as
/// input matrices, with normalized statistics of the full flow as targets.
Dataset build_regression_set(const std::vector<Flow>& flows, const TrainConfig& cfg);
/// Same sampling, with class indices as targets. Throws DataError on labels not in classes.
Dataset build_classification_set(const std::vector<Flow>& flows, const std::vector<std::string>& classes,
                                 const TrainConfig& cfg);

struct TrainingHistory {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Regressor plus what it was trained with, or a classifier and its classes.
struct Model {
  enum class Kind { Regressor, Classifier };
  Kind kind = Kind::Regressor;
  nn::Network network;
  TrainConfig config;
  std::vector<std::string> classes;
  TrainingHistory history;
  bool transferred = false;
};

/// Stage one: regress flow statistics from sampled windows of unlabeled flows.
/// Labels are ignored. Throws DataError when no training examples can be built.
Model pretrain(const std::vector<Flow>& unlabeled, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Stage two: transfer the pretrained trunk into a classifier with a fresh head
/// and train it on the labeled flows.
Model retrain(const Model& pretrained, const std::vector<Flow>& labeled, const std::vector<std::string>& classes,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// The retrain schedule on a randomly initialized network (no transfer).
Model train_supervised_baseline(const std::vector<Flow>& labeled, const std::vector<std::string>& classes,
                                const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct Classification {
  std::size_t class_index = 0;              // majority vote, ties to the lowest index
  std::vector<std::size_t> per_copy;        // prediction for each sampled copy
};

/// Index of the most frequent value in votes over [0, num_classes); ties go to
/// the lowest class index.
std::size_t majority_vote(const std::vector<std::size_t>& votes, std::size_t num_classes);

Classification classify(const Model& model, const Flow& flow, const TrainConfig& cfg);

struct ClassMetrics {
  double accuracy = 0.0;   // one-vs-rest (TP + TN) / total
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool undefined_precision = false;
  bool undefined_recall = false;
  bool undefined_f1 = false;
};

struct ConfusionSummary {
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<ClassMetrics> per_class;
  double macro_accuracy = 0.0;  // mean per-class recall
  std::size_t total = 0;
};

/// Derives per-class and macro metrics from a confusion matrix.
ConfusionSummary summarize_confusion(std::vector<std::vector<std::size_t>> confusion);

struct EvalReport {
  std::vector<std::string> classes;
  ConfusionSummary copies;  // sampled-copy granularity
  ConfusionSummary flows;   // flow-level majority vote
  std::size_t n_sampled = 0;
  std::size_t n_flows = 0;
  std::vector<std::pair<std::string, std::size_t>> flow_predictions;  // (flow id, class index)
};

nlohmann::json to_json(const EvalReport& report);

/// Throws DataError on an empty test set or labels outside classes.
EvalReport evaluate(const Model& model, const std::vector<Flow>& test_flows, const std::vector<std::string>& classes,
                    const TrainConfig& cfg);

/// Uniformly picks n_train flows per class (seeded, without replacement);
/// everything else is test. Both keep input order.
std::pair<std::vector<Flow>, std::vector<Flow>> split_per_class(const std::vector<Flow>& flows, std::size_t n_train,
                                                                std::uint64_t seed);

/// Sorted distinct labels. Throws DataError on unlabeled flows.
std::vector<std::string> label_set(const std::vector<Flow>& flows);

/// k-nearest neighbors over normalized statistic vectors with Euclidean
/// distance. Distance ties keep insertion order; vote ties go to the tied class
/// whose member ranks nearest.
class KnnClassifier {
 public:
  explicit KnnClassifier(std::size_t k);

  void add(const StatVector& normalized, std::size_t label);
  std::size_t predict(const StatVector& normalized) const;
  /// Leave-one-out prediction for training point i.
  std::size_t predict_excluding(const StatVector& normalized, std::size_t exclude) const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::size_t vote(const StatVector& query, std::size_t exclude) const;

  std::size_t k_;
  std::vector<StatVector> points_;
  std::vector<std::size_t> labels_;
};

KnnClassifier knn_baseline(const std::vector<std::pair<StatVector, std::size_t>>& train, std::size_t k);

/// Flow-level report of a KNN fitted on train and scored on test.
EvalReport evaluate_knn(const std::vector<Flow>& train, const std::vector<Flow>& test,
                        const std::vector<std::string>& classes, std::size_t k);

/// Leave-one-out accuracy (macro) of KNN over labeled flows.
ConfusionSummary knn_leave_one_out(const std::vector<Flow>& flows, const std::vector<std::string>& classes,
                                   std::size_t k);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

inline constexpr int kCheckpointVersion = 1;

}  // namespace semitc
