#include "caml/diag/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "caml/error.hpp"

namespace caml::diag {

Eigen::MatrixXd fd_hessian_matrix(const LossEval& loss, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw ContractViolation("fd_hessian: step must be positive");
  const Eigen::Index d = static_cast<Eigen::Index>(theta.size());
  std::vector<double> x(theta.begin(), theta.end());
  auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    x[i] += si;
    x[j] += sj;
    const double v = loss(x);
    x[i] -= si;
    x[j] -= sj;
    return v;
  };
  Eigen::MatrixXd hess(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      const double v = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) / (4 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Eigen::MatrixXd fd_hessian_from_gradient(const GradEval& grad, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw ContractViolation("fd_hessian: step must be positive");
  const Eigen::Index d = static_cast<Eigen::Index>(theta.size());
  std::vector<double> x(theta.begin(), theta.end());
  Eigen::VectorXd up(d), dn(d);
  Eigen::MatrixXd hess(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double keep = x[j];
    x[j] = keep + h;
    grad(x, std::span<double>(up.data(), up.size()));
    x[j] = keep - h;
    grad(x, std::span<double>(dn.data(), dn.size()));
    x[j] = keep;
    hess.col(j) = (up - dn) / (2 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

double condition_number(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) throw ContractViolation("condition_number: empty spectrum");
  const Eigen::VectorXd mag = eigenvalues.cwiseAbs();
  const double hi = mag.maxCoeff(), lo = mag.minCoeff();
  if (hi == 0.0 || lo < 1e-12 * hi) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

HessianReport analyze_hessian(const Eigen::MatrixXd& hessian, int k) {
  if (hessian.rows() != hessian.cols()) throw ContractViolation("analyze_hessian: matrix must be square");
  if (k < 1 || k > hessian.rows()) {
    throw ContractViolation("analyze_hessian: k must lie in [1, dimension]");
  }
  const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("analyze_hessian: eigensolver failed");
  HessianReport r;
  r.eigenvalues = solver.eigenvalues();
  r.eigenvectors = solver.eigenvectors();
  r.kappa = condition_number(r.eigenvalues);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(r.eigenvalues.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(r.eigenvalues(a)) < std::abs(r.eigenvalues(b));
  });
  r.low_curvature.resize(sym.rows(), k);
  for (int c = 0; c < k; ++c) r.low_curvature.col(c) = r.eigenvectors.col(order[c]);
  return r;
}

HessianReport fd_hessian(const LossEval& loss, std::span<const double> theta, double h, int k) {
  return analyze_hessian(fd_hessian_matrix(loss, theta, h), k);
}

double subspace_similarity(const Eigen::MatrixXd& v_i, const Eigen::MatrixXd& v_j) {
  if (v_i.rows() != v_j.rows() || v_i.cols() != v_j.cols() || v_i.cols() == 0) {
    throw ContractViolation("subspace_similarity: bases must have the same non-zero shape");
  }
  const Eigen::Index k = v_i.cols();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  if (((v_i.transpose() * v_i) - eye).norm() > 1e-8) {
    throw ContractViolation("subspace_similarity: first basis is not orthonormal");
  }
  if (((v_j.transpose() * v_j) - eye).norm() > 1e-8) {
    throw ContractViolation("subspace_similarity: second basis is not orthonormal");
  }
  return (v_i.transpose() * v_j).norm() / std::sqrt(static_cast<double>(k));
}

void write_hessian_csv(std::ostream& out, const HessianReport& report) {
  out.precision(17);
  out << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) out << i << ',' << report.eigenvalues(i) << '\n';
}

}  // namespace caml::diag
