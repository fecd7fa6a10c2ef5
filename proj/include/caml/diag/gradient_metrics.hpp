#pragma once

#include <span>

namespace caml::diag {

/// ⟨a, b⟩ / (‖a‖‖b‖). Returns NaN (the "undefined" sentinel) when either norm is zero.
double grad_cosine(std::span<const double> g_res, std::span<const double> g_bc);

/// Fraction of defined entries that are strictly positive; NaN entries are skipped.
/// Returns NaN when no entry is defined.
double positive_cos_fraction(std::span<const double> cosines);

/// ‖g_res‖ / ‖g_bc‖; +∞ when ‖g_bc‖ = 0 and ‖g_res‖ > 0, NaN when both vanish.
double grad_norm_ratio(std::span<const double> g_res, std::span<const double> g_bc);

double l2_norm(std::span<const double> v);

/// ‖a − b‖₂.
double l2_distance(std::span<const double> a, std::span<const double> b);

}  // namespace caml::diag
