#pragma once

#include <span>
#include <vector>

namespace caml::train {

struct AdamConfig {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update of θ in place.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
               const AdamConfig& config);

}  // namespace caml::train
