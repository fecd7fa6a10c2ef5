#include "caml/train/adam.hpp"

#include <cmath>

#include "caml/error.hpp"

namespace caml::train {

void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
               const AdamConfig& config) {
  if (theta.size() != grad.size() || theta.size() != state.m.size()) {
    throw ContractViolation("adam_step: size mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    theta[i] -= config.eta * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

}  // namespace caml::train
