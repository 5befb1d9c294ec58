#include "semitc/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "semitc/nn/network.hpp"
#include "semitc/nn/ops.hpp"
#include "semitc/rng.hpp"

namespace semitc::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

double central_difference(const std::function<double()>& f, double& value, double step) {
  const double saved = value;
  value = saved + step;
  const double plus = f();
  value = saved - step;
  const double minus = f();
  value = saved;
  return (plus - minus) / (2.0 * step);
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = scale * normal(rng);
  return t;
}

double weighted_sum(const Tensor& y, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * weights[i];
  return s;
}

class Tally {
 public:
  Tally(std::string name, const GradCheckOptions& o) : options_(o) { result_.name = std::move(name); }

  // Checks every coordinate of `wrt` against `analytic`.
  void check_all(const std::function<double()>& loss, Tensor& wrt, const Tensor& analytic) {
    for (std::size_t i = 0; i < wrt.size(); ++i) check(loss, wrt[i], analytic[i]);
  }

  void check(const std::function<double()>& loss, double& value, double analytic) {
    record(analytic, central_difference(loss, value, options_.step));
  }

  void record(double analytic, double numeric) {
    result_.max_relative_error =
        std::max(result_.max_relative_error, relative_error(analytic, numeric, options_.scale_floor));
    ++result_.coordinates;
  }

  void skip() { ++result_.skipped; }

  GradCheckResult finish() {
    result_.seeds = options_.seeds;
    result_.passed = result_.coordinates > 0 && result_.max_relative_error < options_.tolerance;
    return result_;
  }

 private:
  const GradCheckOptions& options_;
  GradCheckResult result_;
};

GradCheckResult check_conv(const GradCheckOptions& o) {
  Tally tally("conv1d", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed, s));
    const std::size_t kernel = s % 2 == 0 ? 5 : 3;
    Tensor x = random_tensor({2, 3, 7}, rng), w = random_tensor({4, 3, kernel}, rng), b = random_tensor({4}, rng);
    const Tensor r = random_tensor({2, 4, 7}, rng);
    auto loss = [&] { return weighted_sum(conv1d_forward(x, w, b), r); };
    const auto g = conv1d_backward(r, x, w);
    tally.check_all(loss, x, g.dx);
    tally.check_all(loss, w, g.dweight);
    tally.check_all(loss, b, g.dbias);
  }
  return tally.finish();
}

GradCheckResult check_batchnorm(const GradCheckOptions& o, bool spatial) {
  Tally tally(spatial ? "batchnorm1d[N,C,W]" : "batchnorm1d[N,C]", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed + 100, s));
    const Shape shape = spatial ? Shape{3, 4, 5} : Shape{6, 4};
    Tensor x = random_tensor(shape, rng, 2.0), gamma = random_tensor({4}, rng), beta = random_tensor({4}, rng);
    const Tensor r = random_tensor(shape, rng);
    BatchNormCache cache;
    auto loss = [&] {
      BatchNormCache c;
      return weighted_sum(batchnorm_train_forward(x, gamma, beta, c), r);
    };
    batchnorm_train_forward(x, gamma, beta, cache);
    const auto g = batchnorm_train_backward(r, gamma, cache);
    tally.check_all(loss, x, g.dx);
    tally.check_all(loss, gamma, g.dgamma);
    tally.check_all(loss, beta, g.dbeta);
  }
  return tally.finish();
}

GradCheckResult check_dense(const GradCheckOptions& o) {
  Tally tally("dense", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed + 200, s));
    Tensor x = random_tensor({3, 5}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({4}, rng);
    const Tensor r = random_tensor({3, 4}, rng);
    auto loss = [&] { return weighted_sum(dense_forward(x, w, b), r); };
    const auto g = dense_backward(r, x, w);
    tally.check_all(loss, x, g.dx);
    tally.check_all(loss, w, g.dweight);
    tally.check_all(loss, b, g.dbias);
  }
  return tally.finish();
}

GradCheckResult check_relu(const GradCheckOptions& o) {
  Tally tally("relu", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed + 300, s));
    Tensor x({4, 6});
    // Keep every input at least 0.1 away from the kink.
    for (double& v : x.data) v = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + std::abs(normal(rng)));
    const Tensor r = random_tensor(x.shape, rng);
    auto loss = [&] { return weighted_sum(relu_forward(x), r); };
    tally.check_all(loss, x, relu_backward(r, x));
  }
  return tally.finish();
}

GradCheckResult check_maxpool(const GradCheckOptions& o) {
  Tally tally("maxpool1d", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed + 400, s));
    Tensor x({2, 3, 10});
    // Distinct values at least 0.1 apart: a shuffled ladder plus small jitter.
    std::vector<double> ladder(x.size());
    for (std::size_t i = 0; i < ladder.size(); ++i) ladder[i] = 0.1 * static_cast<double>(i) + 0.01 * uniform01(rng);
    shuffle(std::span<double>(ladder), rng);
    x.data.assign(ladder.begin(), ladder.end());
    std::vector<std::size_t> argmax;
    const Tensor y = maxpool1d_forward(x, 3, argmax);
    const Tensor r = random_tensor(y.shape, rng);
    auto loss = [&] {
      std::vector<std::size_t> a;
      return weighted_sum(maxpool1d_forward(x, 3, a), r);
    };
    tally.check_all(loss, x, maxpool1d_backward(r, x.shape, argmax));
  }
  return tally.finish();
}

GradCheckResult check_mse(const GradCheckOptions& o) {
  Tally tally("mse_loss", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed + 500, s));
    Tensor pred = random_tensor({3, kRegressionOutputs}, rng);
    const Tensor target = random_tensor({3, kRegressionOutputs}, rng);
    auto loss = [&] { return mse_loss(pred, target).loss; };
    tally.check_all(loss, pred, mse_loss(pred, target).grad);
  }
  return tally.finish();
}

GradCheckResult check_cross_entropy(const GradCheckOptions& o) {
  Tally tally("cross_entropy_loss", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(derive_seed(o.base_seed + 600, s));
    Tensor logits = random_tensor({4, 5}, rng, 3.0);
    std::vector<std::size_t> labels(4);
    for (auto& l : labels) l = uniform_index(rng, 5);
    auto loss = [&] { return cross_entropy_loss(logits, labels).loss; };
    tally.check_all(loss, logits, cross_entropy_loss(logits, labels).grad);
  }
  return tally.finish();
}

GradCheckResult check_network(const GradCheckOptions& o) {
  Tally tally("regression_network", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = derive_seed(o.base_seed + 700, s);
    Rng rng(seed);
    Network net(regressor_spec(45), seed);
    net.set_mode(Mode::Train);
    Tensor x({4, 2, 45});
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t t = 0; t < 45; ++t) {
        x[n * 90 + t] = uniform01(rng);                // IAT channel
        x[n * 90 + 45 + t] = uniform(rng, -1.0, 1.0);  // signed length channel
      }
    const Tensor target = random_tensor({4, kRegressionOutputs}, rng, 0.5);

    net.zero_grad();
    const auto base = mse_loss(net.forward(x), target);
    const std::uint64_t signature = net.activation_signature();
    const Tensor dx = net.backward(base.grad);

    auto check_coordinate = [&](double& value, double analytic) {
      bool same_piece = true;
      auto loss = [&] {
        const double l = mse_loss(net.forward(x), target).loss;
        same_piece = same_piece && net.activation_signature() == signature;
        return l;
      };
      const double numeric = central_difference(loss, value, o.step);
      if (!same_piece) {
        tally.skip();
        return;
      }
      tally.record(analytic, numeric);
    };

    for (std::size_t k = 0; k < o.network_samples_per_tensor * 4; ++k) {
      const std::size_t i = uniform_index(rng, x.size());
      check_coordinate(x[i], dx[i]);
    }
    for (Parameter* p : net.all_parameters()) {
      const std::size_t count = std::min(p->value.size(), o.network_samples_per_tensor);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = uniform_index(rng, p->value.size());
        check_coordinate(p->value[i], p->grad[i]);
      }
    }
  }
  return tally.finish();
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& options) {
  return {check_conv(options),  check_batchnorm(options, true), check_batchnorm(options, false),
          check_dense(options), check_relu(options),            check_maxpool(options),
          check_mse(options),   check_cross_entropy(options),   check_network(options)};
}

}  // namespace semitc::nn
