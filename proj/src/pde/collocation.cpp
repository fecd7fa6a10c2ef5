#include "caml/pde/collocation.hpp"

#include <cmath>
#include <random>

#include "caml/error.hpp"

namespace caml::pde {

namespace {

/// 53-bit uniform in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

CollocationSet sample_collocation(const Problem& problem, int n_interior, int n_per_edge,
                                  std::uint64_t seed) {
  if (n_interior < 1 || n_per_edge < 1) {
    throw ContractViolation("sample_collocation: counts must be at least 1");
  }
  std::mt19937_64 rng(seed);
  const Bounds b = problem.bounds();
  CollocationSet set;
  set.interior.resize(2, n_interior);
  for (int i = 0; i < n_interior;) {
    const Point p{b.x0 + (b.x1 - b.x0) * uniform01(rng), b.y0 + (b.y1 - b.y0) * uniform01(rng)};
    if (p.x <= b.x0 || p.y <= b.y0 || !problem.in_domain(p)) continue;
    set.interior(0, i) = p.x;
    set.interior(1, i) = p.y;
    set.gamma.push_back(problem.gamma(p));
    ++i;
  }

  const auto segments = problem.boundary();
  set.boundary.resize(2, static_cast<Eigen::Index>(segments.size()) * n_per_edge);
  int col = 0;
  for (const BoundarySegment& seg : segments) {
    for (int k = 0; k < n_per_edge; ++k, ++col) {
      const Point p = seg.at(uniform01(rng));
      set.boundary(0, col) = p.x;
      set.boundary(1, col) = p.y;
      const auto n = seg.normal(p);
      for (int field : seg.fields) {
        set.records.push_back({col, field, seg.alpha, seg.beta, seg.g(field, p), n[0], n[1]});
      }
    }
  }
  return set;
}

void write_collocation_csv(std::ostream& out, const CollocationSet& set) {
  out.precision(17);
  out << "x,y,kind,alpha,beta,g,nx,ny,gamma\n";
  for (int i = 0; i < set.num_interior(); ++i) {
    out << set.interior(0, i) << ',' << set.interior(1, i) << ",interior,,,,,," << set.gamma[i]
        << '\n';
  }
  for (const BoundaryRecord& r : set.records) {
    out << set.boundary(0, r.point) << ',' << set.boundary(1, r.point) << ",boundary," << r.alpha
        << ',' << r.beta << ',' << r.g << ',' << r.nx << ',' << r.ny << ",\n";
  }
}

Eigen::MatrixXd evaluation_grid(const Problem& problem, int n) {
  if (n < 2) throw ContractViolation("evaluation_grid: need at least 2 points per axis");
  const Bounds b = problem.bounds();
  std::vector<Point> pts;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point p{b.x0 + (b.x1 - b.x0) * i / (n - 1), b.y0 + (b.y1 - b.y0) * j / (n - 1)};
      if (problem.in_domain(p)) pts.push_back(p);
    }
  }
  Eigen::MatrixXd grid(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    grid(0, k) = pts[k].x;
    grid(1, k) = pts[k].y;
  }
  return grid;
}

}  // namespace caml::pde
