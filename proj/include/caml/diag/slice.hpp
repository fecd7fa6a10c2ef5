#pragma once

#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "caml/diag/hessian.hpp"

namespace caml::diag {

/// Affine plane center + α d1 + β d2 with orthonormal d1, d2.
struct SlicePlane {
  Eigen::VectorXd center;
  Eigen::VectorXd d1;
  Eigen::VectorXd d2;

  Eigen::VectorXd at(double alpha, double beta) const { return center + alpha * d1 + beta * d2; }
  /// (α, β) of the orthogonal projection of p onto the plane.
  std::pair<double, double> coordinates(const Eigen::VectorXd& p) const;
};

/// Gram–Schmidt plane through three anchors. Throws DegeneratePlane when the
/// anchors are (numerically) collinear or coincide.
SlicePlane build_slice_plane(const Eigen::VectorXd& anchor0, const Eigen::VectorXd& anchor1,
                             const Eigen::VectorXd& anchor2);

struct SliceRange {
  double lo = -1.0;
  double hi = 1.0;
};

struct SliceGrid {
  std::vector<double> alpha;  // n values
  std::vector<double> beta;   // n values
  Eigen::MatrixXd loss;       // loss(i, j) at (alpha[i], beta[j]); NaN marks a non-finite value
};

/// Loss on an n x n grid over the plane (endpoints included).
SliceGrid evaluate_slice(const SlicePlane& plane, const LossEval& loss, int n, SliceRange alpha,
                         SliceRange beta);

/// Ranges covering the anchors' plane coordinates, padded by `pad` of the span on each side.
std::pair<SliceRange, SliceRange> covering_ranges(const SlicePlane& plane,
                                                  std::span<const Eigen::VectorXd> anchors, double pad);

/// CSV with header alpha,beta,loss,log10_loss; one row per grid point, α-major.
/// Non-finite losses are written as empty fields.
void write_slice_csv(std::ostream& out, const SliceGrid& grid);

}  // namespace caml::diag
