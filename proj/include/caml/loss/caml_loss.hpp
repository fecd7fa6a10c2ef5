#pragma once

#include <functional>
#include <span>
#include <vector>

#include "caml/ad/scalar_duals.hpp"

namespace caml::loss {

/// Raw residuals at the current θ together with their zeroth-order couplings.
/// With offset c the aligned residuals are r̄ = r + γ c and s̄ = s + α c.
struct ResidualBundle {
  std::vector<double> r;
  std::vector<double> s;
  std::vector<double> gamma;
  std::vector<double> alpha;
  double w_res = 1.0;
  double w_bc = 1.0;
  /// For residuals that are not affine in c: J(c) carried to second order.
  std::function<ad::Dual2(ad::Dual2)> objective_of_c;

  /// Throws ContractViolation on length mismatches or non-positive weights.
  void validate() const;
};

struct LossPair {
  double res = 0.0;
  double bc = 0.0;
};

/// Means of squares; an empty residual set contributes 0.
LossPair standard_loss(const ResidualBundle& bundle);

/// Unique minimiser of the quadratic J(c). Throws DegenerateOffset when every
/// γ and α is zero.
double closed_form_offset(const ResidualBundle& bundle);

ResidualBundle aligned_residuals(const ResidualBundle& bundle, double c);

/// J(c) = w_res mean(r̄²) + w_bc mean(s̄²), using objective_of_c when present.
double objective_J(const ResidualBundle& bundle, double c);

struct JDerivs {
  double j = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// J, J', J'' of the affine-in-c objective, exact via univariate second-order duals.
JDerivs objective_derivs(const ResidualBundle& bundle, double c);

using JEval = std::function<JDerivs(double c)>;

struct NewtonResult {
  double c = 0.0;
  std::vector<double> history;  // c_0 … c_K
  int fallback_steps = 0;
};

/// K Newton updates c ← c − J'/J''. When J'' ≤ 0 or |J''| < 1e−12 the step is
/// replaced by a bracketed secant step on J'. Throws SolverDivergence (with
/// the iterate history) if an iterate becomes non-finite.
NewtonResult newton_offset(const JEval& derivs, double c0, int iterations);

/// Offset bookkeeping for the Newton path. c is warm-started step to step and
/// frozen from step t_c on.
struct OffsetState {
  double c = 0.0;
  bool frozen = false;
  int k_init = 10;
  int k_few = 2;
  long t_c = 1000;

  /// Newton iterations to run at step t (1-based); 0 once frozen. Freezes on reaching t_c.
  int iterations_at(long t);
};

struct DelaySchedule {
  long t_d = 0;
  long t_r = 0;
};

/// 0 before t_d, linear ramp over t_r steps, then 1; t_r = 0 is a step at t_d.
double delay_factor(long t, const DelaySchedule& schedule);

/// w_res λ(t) mean(r̄²) + w_bc mean(s̄²). c is a constant here: no gradient flows to it.
double caml_total_loss(const ResidualBundle& bundle, double c, long t, const DelaySchedule& schedule);

/// u + c for every value.
std::vector<double> reconstruct_solution(std::span<const double> u_net, double c);

}  // namespace caml::loss
