#pragma once

// Forward and backward kernels for the fixed layer menu. Activations are
// [N, C, W] for the convolutional part and [N, F] for dense layers.

#include <cstddef>
#include <span>
#include <vector>

#include "semitc/nn/tensor.hpp"

namespace semitc::nn {

/// Stride-1 convolution with zero "same" padding of K/2 on each side (K odd).
/// x: [N, C_in, W], weight: [C_out, C_in, K], bias: [C_out] -> [N, C_out, W].
Tensor conv1d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct Conv1dGrads {
  Tensor dx, dweight, dbias;
};
Conv1dGrads conv1d_backward(const Tensor& dy, const Tensor& x, const Tensor& weight);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel batch statistics saved by the train-mode forward pass.
struct BatchNormCache {
  Tensor normalized;               // x_hat, same shape as x
  std::vector<double> mean;        // per channel
  std::vector<double> variance;    // biased, per channel
  std::vector<double> inv_std;     // 1 / sqrt(var + eps)
};

/// Train mode: normalize with batch statistics over (N, W) per channel.
/// x is [N, C, W] or [N, C]. Throws ShapeError if N*W < 2.
Tensor batchnorm_train_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormCache& cache);

/// Eval mode: normalize with the supplied running statistics.
Tensor batchnorm_eval_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                              std::span<const double> running_mean, std::span<const double> running_var);

struct BatchNormGrads {
  Tensor dx, dgamma, dbeta;
};
/// Full gradient through the batch statistics.
BatchNormGrads batchnorm_train_backward(const Tensor& dy, const Tensor& gamma, const BatchNormCache& cache);
BatchNormGrads batchnorm_eval_backward(const Tensor& dy, const Tensor& x, const Tensor& gamma,
                                       std::span<const double> running_mean, std::span<const double> running_var);

/// Non-overlapping max pooling; trailing W % kernel samples are dropped.
/// argmax receives, per output element, the flat input index of the winner
/// (first index on ties).
Tensor maxpool1d_forward(const Tensor& x, std::size_t kernel, std::vector<std::size_t>& argmax);
Tensor maxpool1d_backward(const Tensor& dy, const Shape& input_shape, std::span<const std::size_t> argmax);

/// x: [N, F], weight: [O, F], bias: [O] -> [N, O].
Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct DenseGrads {
  Tensor dx, dweight, dbias;
};
DenseGrads dense_backward(const Tensor& dy, const Tensor& x, const Tensor& weight);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& dy, const Tensor& x);  // subgradient 0 at 0

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d prediction
};

/// Mean of squared errors over every element.
LossResult mse_loss(const Tensor& prediction, const Tensor& target);

/// Mean negative log-softmax of the true class. logits: [N, K].
LossResult cross_entropy_loss(const Tensor& logits, std::span<const std::size_t> labels);

/// Row-wise softmax of [N, K] logits.
Tensor softmax(const Tensor& logits);

}  // namespace semitc::nn
