#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace caml::ad {

/// Guards applied by the Taylor primitives. Process-wide; defaults are IEEE-double safe.
struct TaylorLimits {
  double denominator_floor = 1e-300;
  double exp_bound = 700.0;
};

TaylorLimits& taylor_limits();

/// Packed index of the symmetric pair (i, j) in row-major upper-triangular storage.
constexpr int hess_index(int dim, int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * dim - i * (i - 1) / 2 + (j - i);
}

constexpr int hess_size(int dim) { return dim * (dim + 1) / 2; }

/// Second-order Taylor jet of a scalar field with respect to d spatial coordinates:
/// value, gradient, and the upper triangle of the Hessian.
class DualTaylor {
 public:
  static constexpr int kMaxDim = 3;
  static constexpr int kMaxHess = hess_size(kMaxDim);

  DualTaylor() = default;
  explicit DualTaylor(int dim, double value = 0.0);

  static DualTaylor constant(int dim, double value) { return DualTaylor(dim, value); }
  /// The coordinate x_k itself: unit gradient along k, zero curvature.
  static DualTaylor variable(int dim, int k, double value);
  static DualTaylor from_parts(int dim, double value, std::span<const double> grad,
                               std::span<const double> hess_packed);

  int dim() const { return dim_; }
  double value() const { return value_; }
  double grad(int k) const { return grad_[k]; }
  double hess(int i, int j) const { return hess_[hess_index(dim_, i, j)]; }
  double laplacian() const;
  std::span<const double> grad() const { return {grad_.data(), static_cast<std::size_t>(dim_)}; }
  std::span<const double> hess_packed() const {
    return {hess_.data(), static_cast<std::size_t>(hess_size(dim_))};
  }

  /// this += w * other, the inner step of an affine layer.
  DualTaylor& add_scaled(const DualTaylor& other, double w);

  DualTaylor& operator+=(const DualTaylor& b);
  DualTaylor& operator-=(const DualTaylor& b);
  DualTaylor& operator*=(double s);
  DualTaylor& operator+=(double s) {
    value_ += s;
    return *this;
  }

  /// f(a) given f(a.value), f'(a.value), f''(a.value).
  friend DualTaylor chain(const DualTaylor& a, double f0, double f1, double f2);
  friend DualTaylor operator*(const DualTaylor& a, const DualTaylor& b);

 private:
  int dim_ = 0;
  double value_ = 0.0;
  std::array<double, kMaxDim> grad_{};
  std::array<double, kMaxHess> hess_{};
};

DualTaylor chain(const DualTaylor& a, double f0, double f1, double f2);

std::vector<DualTaylor> seed_inputs(std::span<const double> x);

DualTaylor operator+(const DualTaylor& a, const DualTaylor& b);
DualTaylor operator-(const DualTaylor& a, const DualTaylor& b);
DualTaylor operator-(const DualTaylor& a);
DualTaylor operator*(const DualTaylor& a, const DualTaylor& b);
DualTaylor operator/(const DualTaylor& a, const DualTaylor& b);

DualTaylor operator+(const DualTaylor& a, double s);
DualTaylor operator+(double s, const DualTaylor& a);
DualTaylor operator-(const DualTaylor& a, double s);
DualTaylor operator-(double s, const DualTaylor& a);
DualTaylor operator*(const DualTaylor& a, double s);
DualTaylor operator*(double s, const DualTaylor& a);
DualTaylor operator/(const DualTaylor& a, double s);
DualTaylor operator/(double s, const DualTaylor& a);

DualTaylor reciprocal(const DualTaylor& a);
DualTaylor tanh(const DualTaylor& a);
DualTaylor sin(const DualTaylor& a);
DualTaylor cos(const DualTaylor& a);
DualTaylor exp(const DualTaylor& a);
DualTaylor sinh(const DualTaylor& a);
DualTaylor cosh(const DualTaylor& a);

}  // namespace caml::ad
