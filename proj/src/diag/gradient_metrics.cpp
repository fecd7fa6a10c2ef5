#include "caml/diag/gradient_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "caml/error.hpp"

namespace caml::diag {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("gradient vectors differ in length");
}
}  // namespace

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double grad_cosine(std::span<const double> g_res, std::span<const double> g_bc) {
  require_same_size(g_res, g_bc);
  double dot = 0.0;
  for (std::size_t i = 0; i < g_res.size(); ++i) dot += g_res[i] * g_bc[i];
  const double na = l2_norm(g_res), nb = l2_norm(g_bc);
  if (na == 0.0 || nb == 0.0) return kNaN;
  // Rounding can push |cos| a hair past 1 for parallel vectors.
  return std::clamp(dot / na / nb, -1.0, 1.0);
}

double positive_cos_fraction(std::span<const double> cosines) {
  long valid = 0, positive = 0;
  for (double c : cosines) {
    if (std::isnan(c)) continue;
    ++valid;
    if (c > 0.0) ++positive;
  }
  return valid == 0 ? kNaN : static_cast<double>(positive) / static_cast<double>(valid);
}

double grad_norm_ratio(std::span<const double> g_res, std::span<const double> g_bc) {
  require_same_size(g_res, g_bc);
  const double na = l2_norm(g_res), nb = l2_norm(g_bc);
  if (nb == 0.0) return na == 0.0 ? kNaN : std::numeric_limits<double>::infinity();
  return na / nb;
}

}  // namespace caml::diag
