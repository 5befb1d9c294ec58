#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semitc/nn/tensor.hpp"

namespace semitc::nn {

struct GradCheckOptions {
  std::size_t seeds = 10;
  std::uint64_t base_seed = 1;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Magnitude floor in the relative-error denominator.
  double scale_floor = 1e-6;
  /// Coordinates sampled per tensor in the end-to-end network check.
  std::size_t network_samples_per_tensor = 6;
};

struct GradCheckResult {
  std::string name;
  std::size_t seeds = 0;
  std::size_t coordinates = 0;
  std::size_t skipped = 0;  // perturbation crossed a ReLU kink or pooling tie
  double max_relative_error = 0.0;
  bool passed = false;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Central finite difference of f with respect to value[index].
double central_difference(const std::function<double()>& f, double& value, double step);

/// Compares analytic gradients of every differentiable operation against
/// central finite differences: conv1d, batchnorm (train mode, 3-D and 2-D),
/// dense, relu, maxpool, mse, cross entropy, and the full regression network.
std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& options = {});

}  // namespace semitc::nn
