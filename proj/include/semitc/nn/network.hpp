#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "semitc/nn/layers.hpp"

namespace semitc::nn {

/// Input geometry plus the two layer stacks. The trunk is transferred between
/// models; the head is rebuilt per task.
struct NetworkSpec {
  std::size_t in_channels = 2;
  std::size_t window = 45;
  std::vector<LayerSpec> trunk;
  std::vector<LayerSpec> head;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Conv(32,5) BN ReLU Conv(32,5) BN ReLU Pool(3) BN Conv(64,3) BN ReLU Pool(3) BN Flatten.
std::vector<LayerSpec> standard_trunk();

/// Dense(256) ReLU Dense(128) ReLU Dense(128) ReLU Dense(outputs).
std::vector<LayerSpec> standard_head(std::size_t outputs);

inline constexpr std::size_t kRegressionOutputs = 24;

NetworkSpec regressor_spec(std::size_t window = 45);
NetworkSpec classifier_spec(std::size_t num_classes, std::size_t window = 45);

/// Per-layer output shapes (batch dimension excluded), trunk then head.
struct ShapeLedger {
  Shape input;
  std::vector<std::pair<LayerSpec, Shape>> trunk;
  std::vector<std::pair<LayerSpec, Shape>> head;

  std::size_t flatten_width() const { return trunk.back().second.at(0); }
};

/// Throws ConfigError unless spec uses the standard trunk and head layout, and
/// ShapeError if the layers cannot be chained for the input geometry.
ShapeLedger check_architecture(const NetworkSpec& spec);

enum class Mode { Train, Eval };

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update. Increments step before use.
void adam_step(std::span<Parameter* const> params, std::uint64_t& step, const AdamConfig& config);

class Network {
 public:
  Network(const NetworkSpec& spec, std::uint64_t seed);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const NetworkSpec& spec() const { return spec_; }
  const ShapeLedger& ledger() const { return ledger_; }
  std::size_t output_size() const { return ledger_.head.back().second.at(0); }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  /// A frozen trunk always runs in eval mode and receives no updates.
  bool trunk_frozen() const { return trunk_frozen_; }
  void set_trunk_frozen(bool frozen) { trunk_frozen_ = frozen; }

  /// x: [N, in_channels, window].
  Tensor forward(const Tensor& x);
  /// Trunk only: [N, flatten width] features.
  Tensor forward_trunk(const Tensor& x);
  /// Accumulates parameter gradients; returns d loss / d input, or an empty
  /// tensor when the trunk is frozen.
  Tensor backward(const Tensor& dy);

  void zero_grad();
  void reinitialize_head(std::uint64_t seed);

  std::vector<Parameter*> trunk_parameters();
  std::vector<Parameter*> head_parameters();
  std::vector<Parameter*> trainable_parameters();
  std::vector<Parameter*> all_parameters();
  std::vector<BatchNorm1d*> trunk_batchnorms();

  std::uint64_t optimizer_steps() const { return optimizer_steps_; }
  void optimizer_step(const AdamConfig& config);

  /// Hash of the ReLU on/off pattern and max-pool winners of the last forward
  /// pass. Two passes with equal signatures lie on the same linear piece.
  std::uint64_t activation_signature() const;

  /// FNV-1a over the bit patterns of trunk parameters and running stats.
  std::uint64_t trunk_checksum() const;

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);

  friend void transfer_trunk(const Network& src, Network& dst, bool freeze);

 private:
  NetworkSpec spec_;
  ShapeLedger ledger_;
  std::vector<std::unique_ptr<Layer>> trunk_;
  std::vector<std::unique_ptr<Layer>> head_;
  Mode mode_ = Mode::Train;
  bool trunk_frozen_ = false;
  std::uint64_t optimizer_steps_ = 0;
};

/// Copies trunk parameters and batch-norm running statistics from src into dst.
/// dst's head is left as initialized and its optimizer state is reset. Throws
/// ConfigError if the trunks differ.
void transfer_trunk(const Network& src, Network& dst, bool freeze);

}  // namespace semitc::nn
