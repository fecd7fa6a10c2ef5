#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "caml/ad/dual_taylor.hpp"
#include "caml/ad/scalar_duals.hpp"
#include "caml/nn/jet_batch.hpp"
#include "caml/nn/mlp.hpp"

namespace caml::pde {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Bounds {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// Value, gradient and Hessian (xx, xy, yy) of one output field at one point.
template <class T>
struct FieldJet {
  T v{};
  std::array<T, 2> g{};
  std::array<T, 3> h{};

  T lap() const { return h[0] + h[2]; }
};

inline constexpr int kMaxFields = 3;
inline constexpr int kJetSlots = 6;  // v, gx, gy, hxx, hxy, hyy
/// Tangent type whose directions are every (field, jet slot) pair.
using JetTangent = ad::Tangent<kMaxFields * kJetSlots>;

/// One boundary piece: α u_f + β ∇u_f·n = g on the curve `at(s)`, s ∈ [0, 1].
struct BoundarySegment {
  std::string name;
  std::function<Point(double)> at;
  std::function<std::array<double, 2>(Point)> normal;  // unit, outward from Ω
  double alpha = 1.0;
  double beta = 0.0;
  std::vector<int> fields{0};
  std::function<double(int field, Point)> g;
};

/// A steady PDE benchmark: residual operator, boundary data, exact solution.
///
/// The offset c enters exactly where the problem has zeroth-order terms in the
/// solution fields listed by offset_fields(); residual(…, c, …) evaluates the
/// aligned residual r̄(c). For linear problems r̄(c) = r(0) + γ c.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual int num_fields() const { return 1; }
  virtual int num_residuals() const { return 1; }
  virtual nn::JetOrder interior_order() const { return nn::JetOrder::kLaplacian; }
  /// True when r̄ is not affine in c, so the offset needs Newton iterations.
  virtual bool nonlinear_offset() const { return false; }
  virtual std::vector<int> offset_fields() const { return {0}; }
  /// Fields compared against the exact solution by the relative L2 metric.
  virtual std::vector<int> error_fields() const { return {0}; }
  virtual nn::MlpSpec default_network() const;
  virtual Bounds bounds() const { return {}; }
  /// Closed-domain membership (boundary included); used to mask evaluation grids.
  virtual bool in_domain(Point p) const;
  virtual std::vector<BoundarySegment> boundary() const = 0;
  /// ∂r/∂u of the interior residual (linear problems).
  virtual double gamma(Point) const { return 0.0; }
  virtual double source(int component, Point p) const = 0;
  virtual double exact(int field, Point p) const = 0;
  virtual ad::DualTaylor exact_jet(int field, Point p) const = 0;

  virtual void residual(std::span<const FieldJet<double>> u, Point p, double c,
                        std::span<double> r) const = 0;
  virtual void residual(std::span<const FieldJet<ad::Dual2>> u, Point p, ad::Dual2 c,
                        std::span<ad::Dual2> r) const = 0;
  virtual void residual(std::span<const FieldJet<JetTangent>> u, Point p, JetTangent c,
                        std::span<JetTangent> r) const = 0;

  bool offset_applies(int field) const;
};

/// Implements the scalar-type-specific virtuals from templated members of
/// `Derived`: residual_t<T>(u, p, c, r) and exact_t<T>(field, x, y).
template <class Derived>
class ProblemImpl : public Problem {
 public:
  double exact(int field, Point p) const override {
    return self().template exact_t<double>(field, p.x, p.y);
  }
  ad::DualTaylor exact_jet(int field, Point p) const override {
    const auto s = ad::seed_inputs(std::vector<double>{p.x, p.y});
    return self().template exact_t<ad::DualTaylor>(field, s[0], s[1]);
  }
  void residual(std::span<const FieldJet<double>> u, Point p, double c,
                std::span<double> r) const override {
    self().residual_t(u, p, c, r);
  }
  void residual(std::span<const FieldJet<ad::Dual2>> u, Point p, ad::Dual2 c,
                std::span<ad::Dual2> r) const override {
    self().residual_t(u, p, c, r);
  }
  void residual(std::span<const FieldJet<JetTangent>> u, Point p, JetTangent c,
                std::span<JetTangent> r) const override {
    self().residual_t(u, p, c, r);
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Jets of the exact solution in FieldJet form, one per field.
std::vector<FieldJet<double>> exact_field_jets(const Problem& problem, Point p);

}  // namespace caml::pde
