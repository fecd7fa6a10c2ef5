#pragma once

#include <functional>
#include <ostream>
#include <span>

#include <Eigen/Dense>

namespace caml::diag {

using LossEval = std::function<double(std::span<const double>)>;
/// Writes ∇L(θ) into the second argument.
using GradEval = std::function<void(std::span<const double>, std::span<double>)>;

struct HessianReport {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
  double kappa = 0.0;            // |λ|max / |λ|min, +∞ when |λ|min < 1e−12·|λ|max
  Eigen::MatrixXd low_curvature;  // k eigenvectors of smallest |λ|, ordered by |λ|
};

/// Four-point central-difference Hessian of a scalar loss, symmetrized.
Eigen::MatrixXd fd_hessian_matrix(const LossEval& loss, std::span<const double> theta, double h);

/// Central differences of an analytic gradient, symmetrized. O(d) gradient calls
/// instead of O(d²) loss calls; used for parameter-space spectra.
Eigen::MatrixXd fd_hessian_from_gradient(const GradEval& grad, std::span<const double> theta, double h);

/// Eigendecomposition, condition number and the k-dimensional low-curvature basis.
/// Throws ContractViolation unless 1 ≤ k ≤ dim and H is square.
HessianReport analyze_hessian(const Eigen::MatrixXd& hessian, int k);

HessianReport fd_hessian(const LossEval& loss, std::span<const double> theta, double h, int k);

/// κ from a spectrum, using magnitudes.
double condition_number(const Eigen::VectorXd& eigenvalues);

/// ‖V_iᵀV_j‖_F / √k. Both inputs need k orthonormal columns (to 1e−8).
double subspace_similarity(const Eigen::MatrixXd& v_i, const Eigen::MatrixXd& v_j);

/// CSV with header index,eigenvalue.
void write_hessian_csv(std::ostream& out, const HessianReport& report);

}  // namespace caml::diag
