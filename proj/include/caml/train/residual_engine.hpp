#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "caml/loss/caml_loss.hpp"
#include "caml/nn/jet_batch.hpp"
#include "caml/pde/collocation.hpp"
#include "caml/pde/problem.hpp"

namespace caml::train {

/// Unweighted mean-square losses at a given offset.
struct LossValues {
  double res = 0.0;
  double bc = 0.0;
};

/// Evaluates residuals and their parameter gradients over a fixed collocation set.
///
/// forward() runs the network once and caches every derivative channel; the
/// offset solve and the loss/gradient assembly then reuse that cache, since c
/// only touches zeroth-order terms.
class ResidualEngine {
 public:
  ResidualEngine(const pde::Problem& problem, const nn::MlpSpec& spec, pde::CollocationSet colloc);

  const pde::CollocationSet& collocation() const { return colloc_; }
  int residuals_per_point() const { return problem_.num_residuals(); }

  /// `step` is only used to label NumericalBlowup errors.
  void forward(std::span<const double> theta, long step = 0);

  /// Raw residuals r(0), s(0) with their couplings γ, α. The interior block is
  /// left out when `res_weight` is 0 (gated off). For nonlinear offsets the
  /// bundle carries objective_of_c and refers to this engine's cache, so it is
  /// valid until the next forward().
  loss::ResidualBundle bundle(double res_weight, double bc_weight) const;

  LossValues losses(double c) const;

  /// Overwrites g_res and g_bc with ∇θ L_res(θ, c) and ∇θ L_bc(θ, c), c held fixed.
  LossValues gradients(std::span<const double> theta, double c, std::span<double> g_res,
                       std::span<double> g_bc);

 private:
  using Jet = pde::FieldJet<double>;

  void extract(const nn::BatchedJet& batch, std::vector<Jet>& jets);
  double boundary_residual(const pde::BoundaryRecord& rec, double c) const;
  double alpha_eff(const pde::BoundaryRecord& rec) const;

  const pde::Problem& problem_;
  pde::CollocationSet colloc_;
  int fields_;
  nn::BatchedJet interior_;
  nn::BatchedJet boundary_;
  std::vector<Jet> interior_jets_;  // point-major: i * fields + f
  std::vector<Jet> boundary_jets_;
  std::vector<char> offset_field_;
  Eigen::MatrixXd interior_bar_;
  Eigen::MatrixXd boundary_bar_;
  long step_ = 0;
};

/// One-shot residual assembly at θ (linear couplings, c = 0).
loss::ResidualBundle assemble_residuals(const pde::Problem& problem, std::span<const double> theta,
                                        const nn::MlpSpec& spec, const pde::CollocationSet& colloc,
                                        double w_res, double w_bc);

/// Relative L2 error of the offset-reconstructed network on a fixed grid.
class L2Evaluator {
 public:
  L2Evaluator(const pde::Problem& problem, const nn::MlpSpec& spec, int grid_points_per_axis);

  /// ‖u + c − u*‖ / ‖u*‖ jointly over the problem's error fields; the offset is
  /// added only to fields that carry it. Throws UndefinedMetric if ‖u*‖ = 0.
  double operator()(std::span<const double> theta, double c);

 private:
  const pde::Problem& problem_;
  nn::BatchedJet batch_;
  std::vector<int> fields_;
  std::vector<char> shifted_;
  Eigen::MatrixXd exact_;  // one row per error field
  double exact_norm_ = 0.0;
};

double relative_l2(std::span<const double> theta, double c, const pde::Problem& problem,
                   const nn::MlpSpec& spec, int grid_points_per_axis);

}  // namespace caml::train
