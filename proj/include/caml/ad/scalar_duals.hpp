#pragma once

#include <array>
#include <cstddef>

namespace caml::ad {

/// Univariate second-order dual number: f, f', f'' along one scalar direction.
/// Used to differentiate the offset objective with respect to c.
struct Dual2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Dual2() = default;
  constexpr Dual2(double value) : v(value) {}  // NOLINT: implicit promotion of constants
  constexpr Dual2(double value, double first, double second) : v(value), d1(first), d2(second) {}

  static constexpr Dual2 variable(double value) { return {value, 1.0, 0.0}; }
};

constexpr Dual2 operator+(Dual2 a, Dual2 b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
constexpr Dual2 operator-(Dual2 a, Dual2 b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
constexpr Dual2 operator-(Dual2 a) { return {-a.v, -a.d1, -a.d2}; }
constexpr Dual2 operator*(Dual2 a, Dual2 b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
constexpr Dual2 operator*(Dual2 a, double s) { return {a.v * s, a.d1 * s, a.d2 * s}; }
constexpr Dual2 operator*(double s, Dual2 a) { return a * s; }
constexpr Dual2 operator+(Dual2 a, double s) { return {a.v + s, a.d1, a.d2}; }
constexpr Dual2 operator+(double s, Dual2 a) { return a + s; }
constexpr Dual2 operator-(Dual2 a, double s) { return {a.v - s, a.d1, a.d2}; }
constexpr Dual2 operator-(double s, Dual2 a) { return {s - a.v, -a.d1, -a.d2}; }
constexpr Dual2 operator/(Dual2 a, double s) { return a * (1.0 / s); }
constexpr Dual2& operator+=(Dual2& a, Dual2 b) { return a = a + b; }
constexpr Dual2& operator-=(Dual2& a, Dual2 b) { return a = a - b; }

/// First-order forward dual with N tangent directions. Residual operators are
/// evaluated with this type to obtain their Jacobian with respect to the jet channels.
template <std::size_t N>
struct Tangent {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Tangent() = default;
  constexpr Tangent(double value) : v(value) {}  // NOLINT: implicit promotion of constants

  static constexpr Tangent variable(double value, std::size_t k) {
    Tangent t(value);
    t.d[k] = 1.0;
    return t;
  }
};

template <std::size_t N>
constexpr Tangent<N> operator+(const Tangent<N>& a, const Tangent<N>& b) {
  Tangent<N> out(a.v + b.v);
  for (std::size_t k = 0; k < N; ++k) out.d[k] = a.d[k] + b.d[k];
  return out;
}
template <std::size_t N>
constexpr Tangent<N> operator-(const Tangent<N>& a, const Tangent<N>& b) {
  Tangent<N> out(a.v - b.v);
  for (std::size_t k = 0; k < N; ++k) out.d[k] = a.d[k] - b.d[k];
  return out;
}
template <std::size_t N>
constexpr Tangent<N> operator-(const Tangent<N>& a) {
  Tangent<N> out(-a.v);
  for (std::size_t k = 0; k < N; ++k) out.d[k] = -a.d[k];
  return out;
}
template <std::size_t N>
constexpr Tangent<N> operator*(const Tangent<N>& a, const Tangent<N>& b) {
  Tangent<N> out(a.v * b.v);
  for (std::size_t k = 0; k < N; ++k) out.d[k] = a.d[k] * b.v + a.v * b.d[k];
  return out;
}
template <std::size_t N>
constexpr Tangent<N> operator*(const Tangent<N>& a, double s) {
  Tangent<N> out(a.v * s);
  for (std::size_t k = 0; k < N; ++k) out.d[k] = a.d[k] * s;
  return out;
}
template <std::size_t N>
constexpr Tangent<N> operator*(double s, const Tangent<N>& a) {
  return a * s;
}
template <std::size_t N>
constexpr Tangent<N> operator+(const Tangent<N>& a, double s) {
  Tangent<N> out = a;
  out.v += s;
  return out;
}
template <std::size_t N>
constexpr Tangent<N> operator+(double s, const Tangent<N>& a) {
  return a + s;
}
template <std::size_t N>
constexpr Tangent<N> operator-(const Tangent<N>& a, double s) {
  return a + (-s);
}
template <std::size_t N>
constexpr Tangent<N> operator-(double s, const Tangent<N>& a) {
  return (-a) + s;
}
template <std::size_t N>
constexpr Tangent<N> operator/(const Tangent<N>& a, double s) {
  return a * (1.0 / s);
}

}  // namespace caml::ad
