#include "caml/loss/caml_loss.hpp"

#include <cmath>

#include "caml/error.hpp"

namespace caml::loss {

void ResidualBundle::validate() const {
  if (r.size() != gamma.size() || s.size() != alpha.size()) {
    throw ContractViolation("ResidualBundle: residual and coefficient lengths differ");
  }
  if (!(w_res > 0.0) || !(w_bc > 0.0)) {
    throw ContractViolation("ResidualBundle: weights must be positive");
  }
}

namespace {

double mean_square(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc / static_cast<double>(v.size());
}

template <class T>
T affine_objective(const ResidualBundle& b, T c, double res_weight) {
  T res = 0.0;
  for (std::size_t i = 0; i < b.r.size(); ++i) {
    const T e = c * b.gamma[i] + b.r[i];
    res += e * e;
  }
  T bc = 0.0;
  for (std::size_t k = 0; k < b.s.size(); ++k) {
    const T e = c * b.alpha[k] + b.s[k];
    bc += e * e;
  }
  T out = 0.0;
  if (!b.r.empty()) out += res * (res_weight / static_cast<double>(b.r.size()));
  if (!b.s.empty()) out += bc * (b.w_bc / static_cast<double>(b.s.size()));
  return out;
}

}  // namespace

LossPair standard_loss(const ResidualBundle& bundle) {
  bundle.validate();
  return {mean_square(bundle.r), mean_square(bundle.s)};
}

double closed_form_offset(const ResidualBundle& b) {
  b.validate();
  double num_res = 0.0, den_res = 0.0, num_bc = 0.0, den_bc = 0.0;
  for (std::size_t i = 0; i < b.r.size(); ++i) {
    num_res += b.gamma[i] * b.r[i];
    den_res += b.gamma[i] * b.gamma[i];
  }
  for (std::size_t k = 0; k < b.s.size(); ++k) {
    num_bc += b.alpha[k] * b.s[k];
    den_bc += b.alpha[k] * b.alpha[k];
  }
  const double wr = b.r.empty() ? 0.0 : b.w_res / static_cast<double>(b.r.size());
  const double wb = b.s.empty() ? 0.0 : b.w_bc / static_cast<double>(b.s.size());
  const double den = wr * den_res + wb * den_bc;
  if (!(den > 0.0)) {
    throw DegenerateOffset("no zeroth-order term couples the offset to any residual");
  }
  return -(wr * num_res + wb * num_bc) / den;
}

ResidualBundle aligned_residuals(const ResidualBundle& bundle, double c) {
  bundle.validate();
  ResidualBundle out = bundle;
  for (std::size_t i = 0; i < out.r.size(); ++i) out.r[i] += out.gamma[i] * c;
  for (std::size_t k = 0; k < out.s.size(); ++k) out.s[k] += out.alpha[k] * c;
  return out;
}

double objective_J(const ResidualBundle& bundle, double c) {
  bundle.validate();
  if (bundle.objective_of_c) return bundle.objective_of_c(ad::Dual2(c)).v;
  return affine_objective(bundle, c, bundle.w_res);
}

JDerivs objective_derivs(const ResidualBundle& bundle, double c) {
  bundle.validate();
  const ad::Dual2 j = bundle.objective_of_c ? bundle.objective_of_c(ad::Dual2::variable(c))
                                            : affine_objective(bundle, ad::Dual2::variable(c), bundle.w_res);
  return {j.v, j.d1, j.d2};
}

namespace {

constexpr double kCurvatureFloor = 1e-12;
constexpr int kMaxBracketDoublings = 60;

/// Step along −J' until J' changes sign, then take the secant (regula falsi)
/// point of the bracket. Falls back to the best point seen if no sign change.
double bracketed_secant(const JEval& derivs, double c, const JDerivs& at_c) {
  if (at_c.d1 == 0.0) return c;
  const double dir = at_c.d1 > 0.0 ? -1.0 : 1.0;
  double width = std::max(1.0, std::abs(c)) * 1e-2;
  double best_c = c, best_j = at_c.j;
  for (int k = 0; k < kMaxBracketDoublings; ++k, width *= 2.0) {
    const double trial = c + dir * width;
    const JDerivs d = derivs(trial);
    if (!std::isfinite(d.j) || !std::isfinite(d.d1)) break;
    if (d.j < best_j) {
      best_j = d.j;
      best_c = trial;
    }
    if ((d.d1 > 0.0) != (at_c.d1 > 0.0) || d.d1 == 0.0) {
      return c - at_c.d1 * (trial - c) / (d.d1 - at_c.d1);
    }
  }
  return best_c;
}

}  // namespace

NewtonResult newton_offset(const JEval& derivs, double c0, int iterations) {
  if (iterations < 1) throw ContractViolation("newton_offset: need at least one iteration");
  NewtonResult out;
  double c = c0;
  out.history.push_back(c);
  for (int k = 0; k < iterations; ++k) {
    const JDerivs d = derivs(c);
    if (d.d2 > 0.0 && std::abs(d.d2) >= kCurvatureFloor) {
      c -= d.d1 / d.d2;
    } else {
      c = bracketed_secant(derivs, c, d);
      ++out.fallback_steps;
    }
    out.history.push_back(c);
    if (!std::isfinite(c)) throw SolverDivergence("offset Newton iteration diverged", out.history);
  }
  out.c = c;
  return out;
}

int OffsetState::iterations_at(long t) {
  if (frozen) return 0;
  if (t >= t_c) {
    frozen = true;
    return 0;
  }
  return t <= 1 ? k_init : k_few;
}

double delay_factor(long t, const DelaySchedule& schedule) {
  if (schedule.t_d < 0 || schedule.t_r < 0) {
    throw ContractViolation("delay schedule: t_d and t_r must be non-negative");
  }
  if (t < schedule.t_d) return 0.0;
  if (t >= schedule.t_d + schedule.t_r) return 1.0;
  return static_cast<double>(t - schedule.t_d) / static_cast<double>(schedule.t_r);
}

double caml_total_loss(const ResidualBundle& bundle, double c, long t, const DelaySchedule& schedule) {
  const LossPair l = standard_loss(aligned_residuals(bundle, c));
  return bundle.w_res * delay_factor(t, schedule) * l.res + bundle.w_bc * l.bc;
}

std::vector<double> reconstruct_solution(std::span<const double> u_net, double c) {
  std::vector<double> out(u_net.begin(), u_net.end());
  for (double& v : out) v += c;
  return out;
}

}  // namespace caml::loss
