#pragma once

#include <cmath>
#include <vector>

namespace semitc::fixtures {

/// Scalar Adam (beta1 0.9, beta2 0.999, eps 1e-8) minimizing theta^2; returns theta after each step.
inline std::vector<double> scalar_adam(double theta, double lr, int steps) {
  double m = 0, v = 0, b1t = 1, b2t = 1;
  std::vector<double> trace;
  for (int t = 1; t <= steps; ++t) {
    const double g = 2 * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    b1t *= 0.9;
    b2t *= 0.999;
    theta -= lr * (m / (1 - b1t)) / (std::sqrt(v / (1 - b2t)) + 1e-8);
    trace.push_back(theta);
  }
  return trace;
}

}  // namespace semitc::fixtures
