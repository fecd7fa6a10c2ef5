#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "caml/pde/problem.hpp"

namespace caml::pde {

/// One boundary constraint α u_f(x_b) + β ∇u_f(x_b)·n_b = g_b.
struct BoundaryRecord {
  int point = 0;  // column in CollocationSet::boundary
  int field = 0;
  double alpha = 1.0;
  double beta = 0.0;
  double g = 0.0;
  double nx = 0.0;
  double ny = 0.0;
};

struct CollocationSet {
  Eigen::MatrixXd interior;  // 2 x N_res
  Eigen::MatrixXd boundary;  // 2 x (boundary points)
  std::vector<BoundaryRecord> records;
  std::vector<double> gamma;  // per interior point

  int num_interior() const { return static_cast<int>(interior.cols()); }
  int num_records() const { return static_cast<int>(records.size()); }
  Point interior_point(int i) const { return {interior(0, i), interior(1, i)}; }
  Point boundary_point(int b) const { return {boundary(0, b), boundary(1, b)}; }
};

/// Uniform interior samples strictly inside Ω (rejection against in_domain and
/// the bounding-box edges) and `n_per_edge` uniform samples on every boundary
/// segment. Deterministic in `seed`.
CollocationSet sample_collocation(const Problem& problem, int n_interior, int n_per_edge,
                                  std::uint64_t seed);

/// CSV with header x,y,kind,alpha,beta,g,nx,ny,gamma; one row per interior
/// point and one per boundary record.
void write_collocation_csv(std::ostream& out, const CollocationSet& set);

/// Uniform n x n grid over the problem's bounding box, restricted to Ω.
Eigen::MatrixXd evaluation_grid(const Problem& problem, int n);

}  // namespace caml::pde
