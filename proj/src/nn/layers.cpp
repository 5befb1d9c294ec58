#include "semitc/nn/layers.hpp"

#include <cmath>

#include "semitc/error.hpp"

namespace semitc::nn {

namespace {

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = uniform(rng, -bound, bound);
}

void mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v;
  h *= 0x100000001b3ULL;
}

[[noreturn]] void backward_before_forward(const char* layer) {
  throw StateError(std::string(layer) + ": backward called before forward");
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm1d: return "batchnorm1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (auto k : {LayerKind::Conv1d, LayerKind::BatchNorm1d, LayerKind::MaxPool1d, LayerKind::ReLU,
                 LayerKind::Flatten, LayerKind::Dense})
    if (to_string(k) == name) return k;
  throw DataError("unknown layer kind '" + name + "'");
}

std::string to_string(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::Conv1d:
      return "Conv1d(" + std::to_string(spec.units) + ", k" + std::to_string(spec.kernel) + ")";
    case LayerKind::BatchNorm1d: return "BatchNorm1d(" + std::to_string(spec.units) + ")";
    case LayerKind::MaxPool1d: return "MaxPool1d(" + std::to_string(spec.kernel) + ")";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense(" + std::to_string(spec.units) + ")";
  }
  return "?";
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const Shape& input) {
  auto need_rank = [&](std::size_t r) {
    if (input.size() != r)
      throw ShapeError(to_string(spec) + " cannot accept per-sample input of shape " + to_string(input));
  };
  std::unique_ptr<Layer> layer;
  switch (spec.kind) {
    case LayerKind::Conv1d:
      need_rank(2);
      layer = std::make_unique<Conv1d>(input[0], spec.units, spec.kernel);
      break;
    case LayerKind::BatchNorm1d:
      if (input.empty() || input.size() > 2 || input[0] != spec.units)
        throw ShapeError(to_string(spec) + " cannot accept per-sample input of shape " + to_string(input));
      layer = std::make_unique<BatchNorm1d>(spec.units);
      break;
    case LayerKind::MaxPool1d:
      need_rank(2);
      layer = std::make_unique<MaxPool1d>(spec.kernel);
      break;
    case LayerKind::ReLU: layer = std::make_unique<ReLU>(); break;
    case LayerKind::Flatten: layer = std::make_unique<Flatten>(); break;
    case LayerKind::Dense:
      need_rank(1);
      layer = std::make_unique<Dense>(input[0], spec.units);
      break;
  }
  layer->output_shape(input);  // validates
  return layer;
}

// --- Conv1d ---

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : weight_("weight", {out_channels, in_channels, kernel}), bias_("bias", {out_channels}) {
  if (in_channels == 0 || out_channels == 0) throw ShapeError("conv1d channel counts must be positive");
  if (kernel == 0 || kernel % 2 == 0) throw ShapeError("conv1d kernel must be odd, got " + std::to_string(kernel));
}

Shape Conv1d::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[0] != weight_.value.dim(1))
    throw ShapeError(to_string(spec()) + " expects [" + std::to_string(weight_.value.dim(1)) + ", W] input, got " +
                     to_string(input));
  return {weight_.value.dim(0), input[1]};
}

Tensor Conv1d::forward(const Tensor& x, bool) {
  input_ = x;
  return conv1d_forward(x, weight_.value, bias_.value);
}

Tensor Conv1d::backward(const Tensor& dy) {
  if (!input_) backward_before_forward("conv1d");
  auto g = conv1d_backward(dy, *input_, weight_.value);
  for (std::size_t i = 0; i < g.dweight.size(); ++i) weight_.grad[i] += g.dweight[i];
  for (std::size_t i = 0; i < g.dbias.size(); ++i) bias_.grad[i] += g.dbias[i];
  return std::move(g.dx);
}

void Conv1d::initialize(Rng& rng) {
  const std::size_t out = weight_.value.dim(0), in = weight_.value.dim(1), k = weight_.value.dim(2);
  glorot_uniform(weight_.value, in * k, out * k, rng);
  bias_.value.fill(0.0);
}

// --- BatchNorm1d ---

BatchNorm1d::BatchNorm1d(std::size_t channels)
    : gamma_("gamma", {channels}),
      beta_("beta", {channels}),
      running_mean_(channels, 0.0),
      running_var_(channels, 1.0) {
  gamma_.value.fill(1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, bool training) {
  input_ = x;
  trained_pass_ = training;
  if (!training) return batchnorm_eval_forward(x, gamma_.value, beta_.value, running_mean_, running_var_);
  Tensor y = batchnorm_train_forward(x, gamma_.value, beta_.value, cache_);
  const double count = static_cast<double>(x.size() / gamma_.value.size());
  const double unbias = count / (count - 1.0);
  for (std::size_t c = 0; c < running_mean_.size(); ++c) {
    running_mean_[c] = (1.0 - kBatchNormMomentum) * running_mean_[c] + kBatchNormMomentum * cache_.mean[c];
    running_var_[c] = (1.0 - kBatchNormMomentum) * running_var_[c] + kBatchNormMomentum * cache_.variance[c] * unbias;
  }
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& dy) {
  if (!input_) backward_before_forward("batchnorm1d");
  auto g = trained_pass_ ? batchnorm_train_backward(dy, gamma_.value, cache_)
                         : batchnorm_eval_backward(dy, *input_, gamma_.value, running_mean_, running_var_);
  for (std::size_t c = 0; c < g.dgamma.size(); ++c) {
    gamma_.grad[c] += g.dgamma[c];
    beta_.grad[c] += g.dbeta[c];
  }
  return std::move(g.dx);
}

void BatchNorm1d::initialize(Rng&) {
  gamma_.value.fill(1.0);
  beta_.value.fill(0.0);
  std::fill(running_mean_.begin(), running_mean_.end(), 0.0);
  std::fill(running_var_.begin(), running_var_.end(), 1.0);
}

// --- MaxPool1d ---

Shape MaxPool1d::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[1] < kernel_ || kernel_ == 0)
    throw ShapeError(to_string(spec()) + " cannot pool input of shape " + to_string(input));
  return {input[0], input[1] / kernel_};
}

Tensor MaxPool1d::forward(const Tensor& x, bool) {
  input_shape_ = x.shape;
  return maxpool1d_forward(x, kernel_, argmax_);
}

Tensor MaxPool1d::backward(const Tensor& dy) {
  if (!input_shape_) backward_before_forward("maxpool1d");
  return maxpool1d_backward(dy, *input_shape_, argmax_);
}

void MaxPool1d::mix_signature(std::uint64_t& hash) const {
  for (auto i : argmax_) mix(hash, i);
}

// --- ReLU / Flatten ---

void ReLU::mix_signature(std::uint64_t& hash) const {
  if (!input_) return;
  for (double v : input_->data) mix(hash, v > 0.0 ? 1 : 0);
}

Tensor ReLU::forward(const Tensor& x, bool) {
  input_ = x;
  return relu_forward(x);
}

Tensor ReLU::backward(const Tensor& dy) {
  if (!input_) backward_before_forward("relu");
  return relu_backward(dy, *input_);
}

Tensor Flatten::forward(const Tensor& x, bool) {
  input_shape_ = x.shape;
  Tensor y = x;
  y.shape = {x.dim(0), x.size() / x.dim(0)};
  return y;
}

Tensor Flatten::backward(const Tensor& dy) {
  if (!input_shape_) backward_before_forward("flatten");
  Tensor dx = dy;
  dx.shape = *input_shape_;
  return dx;
}

// --- Dense ---

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : weight_("weight", {out_features, in_features}), bias_("bias", {out_features}) {
  if (in_features == 0 || out_features == 0) throw ShapeError("dense layer sizes must be positive");
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != weight_.value.dim(1))
    throw ShapeError(to_string(spec()) + " expects " + std::to_string(weight_.value.dim(1)) +
                     " input features, got " + to_string(input));
  return {weight_.value.dim(0)};
}

Tensor Dense::forward(const Tensor& x, bool) {
  input_ = x;
  return dense_forward(x, weight_.value, bias_.value);
}

Tensor Dense::backward(const Tensor& dy) {
  if (!input_) backward_before_forward("dense");
  auto g = dense_backward(dy, *input_, weight_.value);
  for (std::size_t i = 0; i < g.dweight.size(); ++i) weight_.grad[i] += g.dweight[i];
  for (std::size_t i = 0; i < g.dbias.size(); ++i) bias_.grad[i] += g.dbias[i];
  return std::move(g.dx);
}

void Dense::initialize(Rng& rng) {
  glorot_uniform(weight_.value, weight_.value.dim(1), weight_.value.dim(0), rng);
  bias_.value.fill(0.0);
}

}  // namespace semitc::nn
