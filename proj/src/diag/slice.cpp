#include "caml/diag/slice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "caml/error.hpp"

namespace caml::diag {

namespace {
constexpr double kCollinear = 1e-10;
}

std::pair<double, double> SlicePlane::coordinates(const Eigen::VectorXd& p) const {
  const Eigen::VectorXd r = p - center;
  return {d1.dot(r), d2.dot(r)};
}

SlicePlane build_slice_plane(const Eigen::VectorXd& anchor0, const Eigen::VectorXd& anchor1,
                             const Eigen::VectorXd& anchor2) {
  if (anchor0.size() != anchor1.size() || anchor0.size() != anchor2.size() || anchor0.size() < 2) {
    throw ContractViolation("build_slice_plane: anchors must share a dimension of at least 2");
  }
  SlicePlane plane;
  plane.center = anchor0;
  const Eigen::VectorXd a = anchor1 - anchor0;
  const double na = a.norm();
  if (!(na > 0.0)) throw DegeneratePlane("build_slice_plane: first two anchors coincide");
  plane.d1 = a / na;
  const Eigen::VectorXd b = anchor2 - anchor0;
  Eigen::VectorXd r = b - plane.d1.dot(b) * plane.d1;
  r -= plane.d1.dot(r) * plane.d1;  // second pass for orthogonality to rounding
  const double nr = r.norm();
  if (!(nr > kCollinear * std::max(na, b.norm()))) {
    throw DegeneratePlane("build_slice_plane: anchors are collinear");
  }
  plane.d2 = r / nr;
  return plane;
}

SliceGrid evaluate_slice(const SlicePlane& plane, const LossEval& loss, int n, SliceRange alpha,
                         SliceRange beta) {
  if (n < 2) throw ContractViolation("evaluate_slice: need at least 2 points per axis");
  SliceGrid g;
  for (int i = 0; i < n; ++i) {
    g.alpha.push_back(alpha.lo + (alpha.hi - alpha.lo) * i / (n - 1));
    g.beta.push_back(beta.lo + (beta.hi - beta.lo) * i / (n - 1));
  }
  g.loss.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd p = plane.at(g.alpha[i], g.beta[j]);
      const double v = loss(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
      g.loss(i, j) = std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return g;
}

std::pair<SliceRange, SliceRange> covering_ranges(const SlicePlane& plane,
                                                  std::span<const Eigen::VectorXd> anchors, double pad) {
  SliceRange a{0.0, 0.0}, b{0.0, 0.0};
  for (const auto& p : anchors) {
    const auto [x, y] = plane.coordinates(p);
    a.lo = std::min(a.lo, x);
    a.hi = std::max(a.hi, x);
    b.lo = std::min(b.lo, y);
    b.hi = std::max(b.hi, y);
  }
  auto widen = [pad](SliceRange r) {
    const double span = std::max(r.hi - r.lo, 1e-12);
    return SliceRange{r.lo - pad * span, r.hi + pad * span};
  };
  return {widen(a), widen(b)};
}

void write_slice_csv(std::ostream& out, const SliceGrid& grid) {
  out.precision(17);
  out << "alpha,beta,loss,log10_loss\n";
  for (std::size_t i = 0; i < grid.alpha.size(); ++i) {
    for (std::size_t j = 0; j < grid.beta.size(); ++j) {
      const double v = grid.loss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out << grid.alpha[i] << ',' << grid.beta[j] << ',';
      if (std::isfinite(v)) {
        out << v << ',' << std::log10(std::max(v, std::numeric_limits<double>::min()));
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

}  // namespace caml::diag
