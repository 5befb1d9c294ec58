#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semitc/nn/ops.hpp"
#include "semitc/nn/tensor.hpp"
#include "semitc/rng.hpp"

namespace semitc::nn {

enum class LayerKind { Conv1d, BatchNorm1d, MaxPool1d, ReLU, Flatten, Dense };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

/// Declarative layer description. units is out_channels (Conv1d), channels
/// (BatchNorm1d) or out_features (Dense); kernel applies to Conv1d and MaxPool1d.
struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::size_t units = 0;
  std::size_t kernel = 0;

  static LayerSpec conv(std::size_t out_channels, std::size_t kernel) { return {LayerKind::Conv1d, out_channels, kernel}; }
  static LayerSpec batchnorm(std::size_t channels) { return {LayerKind::BatchNorm1d, channels, 0}; }
  static LayerSpec maxpool(std::size_t kernel) { return {LayerKind::MaxPool1d, 0, kernel}; }
  static LayerSpec relu() { return {LayerKind::ReLU, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0}; }
  static LayerSpec dense(std::size_t out_features) { return {LayerKind::Dense, out_features, 0}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

std::string to_string(const LayerSpec& spec);

/// A layer caches what its backward pass needs during forward. Shapes passed to
/// output_shape exclude the batch dimension.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerSpec spec() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual void initialize(Rng& /*rng*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  /// Folds the piecewise-linear state of the last forward pass into hash.
  virtual void mix_signature(std::uint64_t& /*hash*/) const {}
};

/// Instantiates spec for a per-sample input shape; throws ShapeError when the
/// layer cannot accept it.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const Shape& input);

class Conv1d final : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  LayerSpec spec() const override { return LayerSpec::conv(weight_.value.dim(0), weight_.value.dim(2)); }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }

 private:
  Parameter weight_, bias_;
  std::optional<Tensor> input_;
};

class BatchNorm1d final : public Layer {
 public:
  explicit BatchNorm1d(std::size_t channels);
  LayerSpec spec() const override { return LayerSpec::batchnorm(gamma_.value.size()); }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm1d>(*this); }

  std::vector<double>& running_mean() { return running_mean_; }
  std::vector<double>& running_var() { return running_var_; }
  const std::vector<double>& running_mean() const { return running_mean_; }
  const std::vector<double>& running_var() const { return running_var_; }

 private:
  Parameter gamma_, beta_;
  std::vector<double> running_mean_, running_var_;
  BatchNormCache cache_;
  std::optional<Tensor> input_;
  bool trained_pass_ = false;
};

class MaxPool1d final : public Layer {
 public:
  explicit MaxPool1d(std::size_t kernel) : kernel_(kernel) {}
  LayerSpec spec() const override { return LayerSpec::maxpool(kernel_); }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool1d>(*this); }
  void mix_signature(std::uint64_t& hash) const override;

 private:
  std::size_t kernel_;
  std::vector<std::size_t> argmax_;
  std::optional<Shape> input_shape_;
};

class ReLU final : public Layer {
 public:
  LayerSpec spec() const override { return LayerSpec::relu(); }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
  void mix_signature(std::uint64_t& hash) const override;

 private:
  std::optional<Tensor> input_;
};

class Flatten final : public Layer {
 public:
  LayerSpec spec() const override { return LayerSpec::flatten(); }
  Shape output_shape(const Shape& input) const override { return {Tensor::element_count(input)}; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  std::optional<Shape> input_shape_;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);
  LayerSpec spec() const override { return LayerSpec::dense(weight_.value.dim(0)); }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

 private:
  Parameter weight_, bias_;
  std::optional<Tensor> input_;
};

}  // namespace semitc::nn
