#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "caml/diag/hessian.hpp"
#include "caml/diag/slice.hpp"
#include "caml/nn/jet_batch.hpp"
#include "caml/nn/mlp.hpp"

namespace caml::diag {

/// u'' = −sin x on [0, π], sampled at n uniformly spaced points (endpoints included).
class Poisson1D {
 public:
  explicit Poisson1D(int n = 100);

  int size() const { return static_cast<int>(x_.size()); }
  const std::vector<double>& x() const { return x_; }
  double spacing() const { return spacing_; }

  /// Function-space residual loss of grid values: mean over the n − 2 interior
  /// nodes of (central second difference + sin x)². Any affine u shift is annihilated.
  double function_loss(std::span<const double> u) const;

  /// A sin(ωx + φ) + B on the grid.
  std::vector<double> ansatz(double omega, double phi, double amplitude, double shift) const;

 private:
  std::vector<double> x_;
  double spacing_;
};

/// Network losses on the 1D grid: residual mean((u'' + sin x)²) with exact
/// second derivatives, and a data misfit mean((u − target)²).
class Poisson1DNetwork {
 public:
  Poisson1DNetwork(const Poisson1D& problem, const nn::MlpSpec& spec);

  const nn::MlpSpec& spec() const { return spec_; }
  double residual_loss(std::span<const double> theta);
  /// Residual loss and its gradient (written to grad).
  double residual_gradient(std::span<const double> theta, std::span<double> grad);
  /// L_res + L_data and its gradient.
  double fit_gradient(std::span<const double> theta, std::span<const double> target, std::span<double> grad);

 private:
  Eigen::VectorXd sin_x_;
  nn::MlpSpec spec_;
  nn::BatchedJet batch_;
  Eigen::MatrixXd bar_;
};

struct ValleyConfig {
  std::vector<double> shifts{0.0, -1.0, 1.0};  // first entry is the reference anchor
  int hidden_layers = 3;
  int hidden_width = 20;
  int train_steps = 3000;
  double eta = 1e-3;
  std::uint64_t seed = 1;  // one initialisation shared by every anchor
  double h = 1e-3;
  int k_function = 1;
  int k_parameter = 100;
};

struct ValleyReport {
  std::vector<double> shifts;
  std::vector<double> final_loss;    // residual loss at each anchor
  std::vector<HessianReport> hessians;
  std::vector<double> similarity;    // Sim against the first anchor (NaN for the first)
  std::vector<Eigen::VectorXd> anchors;  // grid values or trained parameters
};

/// Hessians of the function-space residual loss at the constant-shifted exact solutions.
ValleyReport function_space_valley(const Poisson1D& problem, const ValleyConfig& config);

/// One network per shift, each trained from the same initialisation with L_res + L_data.
std::vector<nn::ParamVector> train_valley_anchors(const Poisson1D& problem, const ValleyConfig& config);

/// Trains one network per shift with L_res + L_data, then analyses the residual-loss
/// Hessian (central differences of analytic gradients) at each trained point.
ValleyReport parameter_space_valley(const Poisson1D& problem, const ValleyConfig& config);

nn::MlpSpec valley_network(const ValleyConfig& config);

/// Function-space plane through the exact solution, its shift by shifts[1], and
/// a non-constant third anchor (2 sin x). Constant-shifted anchors alone are
/// collinear, so they cannot span a plane.
SlicePlane function_space_plane(const Poisson1D& problem, const ValleyConfig& config);

}  // namespace caml::diag
