#include "semitc/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "semitc/error.hpp"

namespace semitc::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// im2col for "same" padding: cols[(c*K + k), n*W + t] = x[n, c, t + k - K/2].
RowMatrix im2col(const Tensor& x, std::size_t kernel) {
  const std::size_t n_batch = x.dim(0), channels = x.dim(1), width = x.dim(2);
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(channels * kernel),
                                   static_cast<Eigen::Index>(n_batch * width));
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t k = 0; k < kernel; ++k) {
      double* row = cols.row(static_cast<Eigen::Index>(c * kernel + k)).data();
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
      const std::size_t t_begin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -shift));
      const std::size_t t_end =
          static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(width),
                                                            static_cast<std::ptrdiff_t>(width) - shift));
      for (std::size_t n = 0; n < n_batch; ++n) {
        const double* src = x.ptr() + (n * channels + c) * width;
        double* dst = row + n * width;
        for (std::size_t t = t_begin; t < t_end; ++t) dst[t] = src[static_cast<std::ptrdiff_t>(t) + shift];
      }
    }
  return cols;
}

void check_conv_shapes(const Tensor& x, const Tensor& weight) {
  require(x.rank() == 3, "conv1d input must be [N, C_in, W], got " + to_string(x.shape));
  require(weight.rank() == 3, "conv1d weight must be [C_out, C_in, K], got " + to_string(weight.shape));
  require(x.dim(1) == weight.dim(1), "conv1d input channels " + std::to_string(x.dim(1)) +
                                         " do not match weight in-channels " + std::to_string(weight.dim(1)));
  require(weight.dim(2) % 2 == 1, "conv1d kernel size must be odd, got " + std::to_string(weight.dim(2)));
}

std::size_t spatial(const Tensor& x) { return x.rank() == 3 ? x.dim(2) : 1; }

}  // namespace

Tensor conv1d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  check_conv_shapes(x, weight);
  const std::size_t n_batch = x.dim(0), width = x.dim(2), out_ch = weight.dim(0), kernel = weight.dim(2);
  require(bias.size() == out_ch, "conv1d bias must have " + std::to_string(out_ch) + " entries");
  const RowMatrix cols = im2col(x, kernel);
  const ConstMatMap w(weight.ptr(), static_cast<Eigen::Index>(out_ch), cols.rows());
  RowMatrix y = w * cols;  // [C_out, N*W]
  Tensor out({n_batch, out_ch, width});
  for (std::size_t n = 0; n < n_batch; ++n)
    for (std::size_t o = 0; o < out_ch; ++o) {
      const double* src = y.row(static_cast<Eigen::Index>(o)).data() + n * width;
      double* dst = out.ptr() + (n * out_ch + o) * width;
      for (std::size_t t = 0; t < width; ++t) dst[t] = src[t] + bias[o];
    }
  return out;
}

Conv1dGrads conv1d_backward(const Tensor& dy, const Tensor& x, const Tensor& weight) {
  check_conv_shapes(x, weight);
  const std::size_t n_batch = x.dim(0), in_ch = x.dim(1), width = x.dim(2);
  const std::size_t out_ch = weight.dim(0), kernel = weight.dim(2);
  require(dy.shape == Shape({n_batch, out_ch, width}),
          "conv1d output gradient has shape " + to_string(dy.shape) + ", expected " +
              to_string({n_batch, out_ch, width}));

  RowMatrix dy_mat(static_cast<Eigen::Index>(out_ch), static_cast<Eigen::Index>(n_batch * width));
  for (std::size_t n = 0; n < n_batch; ++n)
    for (std::size_t o = 0; o < out_ch; ++o)
      std::copy_n(dy.ptr() + (n * out_ch + o) * width, width,
                  dy_mat.row(static_cast<Eigen::Index>(o)).data() + n * width);

  const RowMatrix cols = im2col(x, kernel);
  Conv1dGrads g{Tensor(x.shape), Tensor(weight.shape), Tensor({out_ch})};
  MatMap(g.dweight.ptr(), static_cast<Eigen::Index>(out_ch), cols.rows()).noalias() = dy_mat * cols.transpose();
  Eigen::Map<Eigen::VectorXd>(g.dbias.ptr(), static_cast<Eigen::Index>(out_ch)) = dy_mat.rowwise().sum();

  const ConstMatMap w(weight.ptr(), static_cast<Eigen::Index>(out_ch), cols.rows());
  const RowMatrix dcols = w.transpose() * dy_mat;  // [C_in*K, N*W]
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  for (std::size_t c = 0; c < in_ch; ++c)
    for (std::size_t k = 0; k < kernel; ++k) {
      const double* row = dcols.row(static_cast<Eigen::Index>(c * kernel + k)).data();
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
      const std::size_t t_begin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -shift));
      const std::size_t t_end =
          static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(width),
                                                            static_cast<std::ptrdiff_t>(width) - shift));
      for (std::size_t n = 0; n < n_batch; ++n) {
        double* dst = g.dx.ptr() + (n * in_ch + c) * width;
        const double* src = row + n * width;
        for (std::size_t t = t_begin; t < t_end; ++t) dst[static_cast<std::ptrdiff_t>(t) + shift] += src[t];
      }
    }
  return g;
}

Tensor batchnorm_train_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormCache& cache) {
  require(x.rank() == 2 || x.rank() == 3, "batchnorm input must be [N, C] or [N, C, W], got " + to_string(x.shape));
  const std::size_t n_batch = x.dim(0), channels = x.dim(1), width = spatial(x);
  require(gamma.size() == channels && beta.size() == channels, "batchnorm affine parameters do not match channels");
  const std::size_t count = n_batch * width;
  if (count < 2)
    throw ShapeError("degenerate batch: train-mode batchnorm needs at least 2 values per channel, got " +
                     std::to_string(count));
  cache.normalized = Tensor(x.shape);
  cache.mean.assign(channels, 0.0);
  cache.variance.assign(channels, 0.0);
  cache.inv_std.assign(channels, 0.0);
  Tensor y(x.shape);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const double* p = x.ptr() + (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t) sum += p[t];
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const double* p = x.ptr() + (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t) sq += (p[t] - mean) * (p[t] - mean);
    }
    const double var = sq / static_cast<double>(count);
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
    cache.mean[c] = mean;
    cache.variance[c] = var;
    cache.inv_std[c] = inv_std;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const std::size_t base = (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t) {
        const double xh = (x[base + t] - mean) * inv_std;
        cache.normalized[base + t] = xh;
        y[base + t] = gamma[c] * xh + beta[c];
      }
    }
  }
  return y;
}

Tensor batchnorm_eval_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                              std::span<const double> running_mean, std::span<const double> running_var) {
  require(x.rank() == 2 || x.rank() == 3, "batchnorm input must be [N, C] or [N, C, W], got " + to_string(x.shape));
  const std::size_t n_batch = x.dim(0), channels = x.dim(1), width = spatial(x);
  require(gamma.size() == channels && running_mean.size() == channels && running_var.size() == channels,
          "batchnorm parameters do not match channels");
  Tensor y(x.shape);
  for (std::size_t n = 0; n < n_batch; ++n)
    for (std::size_t c = 0; c < channels; ++c) {
      const double scale = gamma[c] / std::sqrt(running_var[c] + kBatchNormEps);
      const std::size_t base = (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t) y[base + t] = (x[base + t] - running_mean[c]) * scale + beta[c];
    }
  return y;
}

BatchNormGrads batchnorm_train_backward(const Tensor& dy, const Tensor& gamma, const BatchNormCache& cache) {
  const Tensor& xh = cache.normalized;
  require(dy.shape == xh.shape, "batchnorm gradient shape mismatch");
  const std::size_t n_batch = xh.dim(0), channels = xh.dim(1), width = spatial(xh);
  const double count = static_cast<double>(n_batch * width);
  BatchNormGrads g{Tensor(xh.shape), Tensor({channels}), Tensor({channels})};
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const std::size_t base = (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t) {
        sum_dy += dy[base + t];
        sum_dy_xh += dy[base + t] * xh[base + t];
      }
    }
    g.dgamma[c] = sum_dy_xh;
    g.dbeta[c] = sum_dy;
    const double scale = gamma[c] * cache.inv_std[c] / count;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const std::size_t base = (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t)
        g.dx[base + t] = scale * (count * dy[base + t] - sum_dy - xh[base + t] * sum_dy_xh);
    }
  }
  return g;
}

BatchNormGrads batchnorm_eval_backward(const Tensor& dy, const Tensor& x, const Tensor& gamma,
                                       std::span<const double> running_mean, std::span<const double> running_var) {
  require(dy.shape == x.shape, "batchnorm gradient shape mismatch");
  const std::size_t n_batch = x.dim(0), channels = x.dim(1), width = spatial(x);
  BatchNormGrads g{Tensor(x.shape), Tensor({channels}), Tensor({channels})};
  for (std::size_t c = 0; c < channels; ++c) {
    const double inv_std = 1.0 / std::sqrt(running_var[c] + kBatchNormEps);
    for (std::size_t n = 0; n < n_batch; ++n) {
      const std::size_t base = (n * channels + c) * width;
      for (std::size_t t = 0; t < width; ++t) {
        g.dgamma[c] += dy[base + t] * (x[base + t] - running_mean[c]) * inv_std;
        g.dbeta[c] += dy[base + t];
        g.dx[base + t] = dy[base + t] * gamma[c] * inv_std;
      }
    }
  }
  return g;
}

Tensor maxpool1d_forward(const Tensor& x, std::size_t kernel, std::vector<std::size_t>& argmax) {
  require(x.rank() == 3, "maxpool input must be [N, C, W], got " + to_string(x.shape));
  require(kernel >= 1, "maxpool kernel must be >= 1");
  const std::size_t n_batch = x.dim(0), channels = x.dim(1), width = x.dim(2);
  require(width >= kernel, "maxpool input width " + std::to_string(width) + " is smaller than kernel " +
                               std::to_string(kernel));
  const std::size_t out_w = width / kernel;
  Tensor y({n_batch, channels, out_w});
  argmax.assign(y.size(), 0);
  for (std::size_t nc = 0; nc < n_batch * channels; ++nc)
    for (std::size_t j = 0; j < out_w; ++j) {
      std::size_t best = nc * width + j * kernel;
      for (std::size_t k = 1; k < kernel; ++k) {
        const std::size_t i = nc * width + j * kernel + k;
        if (x[i] > x[best]) best = i;
      }
      y[nc * out_w + j] = x[best];
      argmax[nc * out_w + j] = best;
    }
  return y;
}

Tensor maxpool1d_backward(const Tensor& dy, const Shape& input_shape, std::span<const std::size_t> argmax) {
  require(dy.size() == argmax.size(), "maxpool gradient does not match saved argmax");
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
  return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(x.rank() == 2, "dense input must be [N, F], got " + to_string(x.shape));
  require(weight.rank() == 2 && weight.dim(1) == x.dim(1),
          "dense weight " + to_string(weight.shape) + " does not accept input " + to_string(x.shape));
  require(bias.size() == weight.dim(0), "dense bias size mismatch");
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto f = static_cast<Eigen::Index>(x.dim(1));
  const auto o = static_cast<Eigen::Index>(weight.dim(0));
  Tensor y({x.dim(0), weight.dim(0)});
  MatMap ym(y.ptr(), n, o);
  ym.noalias() = ConstMatMap(x.ptr(), n, f) * ConstMatMap(weight.ptr(), o, f).transpose();
  ym.rowwise() += ConstVecMap(bias.ptr(), o).transpose();
  return y;
}

DenseGrads dense_backward(const Tensor& dy, const Tensor& x, const Tensor& weight) {
  require(x.rank() == 2 && weight.rank() == 2 && weight.dim(1) == x.dim(1), "dense shape mismatch");
  require(dy.shape == Shape({x.dim(0), weight.dim(0)}), "dense output gradient has shape " + to_string(dy.shape));
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto f = static_cast<Eigen::Index>(x.dim(1));
  const auto o = static_cast<Eigen::Index>(weight.dim(0));
  DenseGrads g{Tensor(x.shape), Tensor(weight.shape), Tensor({weight.dim(0)})};
  const ConstMatMap dym(dy.ptr(), n, o);
  MatMap(g.dweight.ptr(), o, f).noalias() = dym.transpose() * ConstMatMap(x.ptr(), n, f);
  Eigen::Map<Eigen::RowVectorXd>(g.dbias.ptr(), o) = dym.colwise().sum();
  MatMap(g.dx.ptr(), n, f).noalias() = dym * ConstMatMap(weight.ptr(), o, f);
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& dy, const Tensor& x) {
  require(dy.shape == x.shape, "relu gradient shape mismatch");
  Tensor dx(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
  require(prediction.shape == target.shape, "mse: prediction " + to_string(prediction.shape) +
                                                " and target " + to_string(target.shape) + " differ");
  require(prediction.size() > 0, "mse of empty tensors");
  const double count = static_cast<double>(prediction.size());
  LossResult r{0.0, Tensor(prediction.shape)};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double diff = prediction[i] - target[i];
    r.loss += diff * diff;
    r.grad[i] = 2.0 * diff / count;
  }
  r.loss /= count;
  return r;
}

Tensor softmax(const Tensor& logits) {
  require(logits.rank() == 2, "softmax expects [N, K] logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor p(logits.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.ptr() + i * k;
    const double shift = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - shift);
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] = std::exp(row[j] - shift) / z;
  }
  return p;
}

LossResult cross_entropy_loss(const Tensor& logits, std::span<const std::size_t> labels) {
  require(logits.rank() == 2 && logits.dim(0) == labels.size() && logits.dim(0) > 0,
          "cross entropy expects [N, K] logits with N labels");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  LossResult r{0.0, softmax(logits)};
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] < k, "label " + std::to_string(labels[i]) + " out of range for " + std::to_string(k) +
                               " classes");
    const double* row = logits.ptr() + i * k;
    const double shift = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - shift);
    r.loss += std::log(z) + shift - row[labels[i]];
    r.grad[i * k + labels[i]] -= 1.0;
  }
  for (double& g : r.grad.data) g /= static_cast<double>(n);
  r.loss /= static_cast<double>(n);
  return r;
}

}  // namespace semitc::nn
