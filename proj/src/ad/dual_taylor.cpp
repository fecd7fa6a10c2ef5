#include "caml/ad/dual_taylor.hpp"

#include <cmath>
#include <string>

#include "caml/error.hpp"

namespace caml::ad {

TaylorLimits& taylor_limits() {
  static TaylorLimits limits;
  return limits;
}

namespace {

void require_same_dim(const DualTaylor& a, const DualTaylor& b) {
  if (a.dim() != b.dim()) {
    throw ContractViolation("DualTaylor dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  }
}

void require_finite(double v, const char* op) {
  if (!std::isfinite(v)) throw ContractViolation(std::string(op) + ": non-finite input value");
}

void check_exp_argument(double v, const char* op) {
  require_finite(v, op);
  if (std::abs(v) > taylor_limits().exp_bound) {
    throw OverflowError(std::string(op) + ": argument " + std::to_string(v) +
                        " exceeds overflow bound");
  }
}

}  // namespace

DualTaylor::DualTaylor(int dim, double value) : dim_(dim), value_(value) {
  if (dim < 1 || dim > kMaxDim) {
    throw ContractViolation("DualTaylor dimension must be in [1, 3], got " + std::to_string(dim));
  }
}

DualTaylor DualTaylor::variable(int dim, int k, double value) {
  DualTaylor out(dim, value);
  if (k < 0 || k >= dim) throw ContractViolation("seed coordinate out of range");
  out.grad_[k] = 1.0;
  return out;
}

DualTaylor DualTaylor::from_parts(int dim, double value, std::span<const double> grad,
                                  std::span<const double> hess_packed) {
  DualTaylor out(dim, value);
  if (grad.size() != static_cast<std::size_t>(dim) ||
      hess_packed.size() != static_cast<std::size_t>(hess_size(dim))) {
    throw ContractViolation("DualTaylor::from_parts: component sizes do not match dimension");
  }
  for (int k = 0; k < dim; ++k) out.grad_[k] = grad[k];
  for (int p = 0; p < hess_size(dim); ++p) out.hess_[p] = hess_packed[p];
  return out;
}

double DualTaylor::laplacian() const {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) s += hess_[hess_index(dim_, k, k)];
  return s;
}

DualTaylor& DualTaylor::add_scaled(const DualTaylor& other, double w) {
  require_same_dim(*this, other);
  value_ += w * other.value_;
  for (int k = 0; k < dim_; ++k) grad_[k] += w * other.grad_[k];
  for (int p = 0; p < hess_size(dim_); ++p) hess_[p] += w * other.hess_[p];
  return *this;
}

DualTaylor& DualTaylor::operator+=(const DualTaylor& b) { return add_scaled(b, 1.0); }
DualTaylor& DualTaylor::operator-=(const DualTaylor& b) { return add_scaled(b, -1.0); }

DualTaylor& DualTaylor::operator*=(double s) {
  value_ *= s;
  for (int k = 0; k < dim_; ++k) grad_[k] *= s;
  for (int p = 0; p < hess_size(dim_); ++p) hess_[p] *= s;
  return *this;
}

DualTaylor chain(const DualTaylor& a, double f0, double f1, double f2) {
  DualTaylor out(a.dim_, f0);
  const int d = a.dim_;
  for (int k = 0; k < d; ++k) out.grad_[k] = f1 * a.grad_[k];
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int p = hess_index(d, i, j);
      out.hess_[p] = f2 * a.grad_[i] * a.grad_[j] + f1 * a.hess_[p];
    }
  }
  return out;
}

std::vector<DualTaylor> seed_inputs(std::span<const double> x) {
  if (x.empty()) throw ContractViolation("seed_inputs: empty input");
  const int d = static_cast<int>(x.size());
  std::vector<DualTaylor> out;
  out.reserve(x.size());
  for (int k = 0; k < d; ++k) out.push_back(DualTaylor::variable(d, k, x[k]));
  return out;
}

DualTaylor operator+(const DualTaylor& a, const DualTaylor& b) {
  DualTaylor out = a;
  out += b;
  return out;
}

DualTaylor operator-(const DualTaylor& a, const DualTaylor& b) {
  DualTaylor out = a;
  out -= b;
  return out;
}

DualTaylor operator-(const DualTaylor& a) { return a * -1.0; }

DualTaylor operator*(const DualTaylor& a, const DualTaylor& b) {
  require_same_dim(a, b);
  const int d = a.dim_;
  DualTaylor out(d, a.value_ * b.value_);
  for (int k = 0; k < d; ++k) out.grad_[k] = a.grad_[k] * b.value_ + a.value_ * b.grad_[k];
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int p = hess_index(d, i, j);
      out.hess_[p] = a.hess_[p] * b.value_ + a.grad_[i] * b.grad_[j] + a.grad_[j] * b.grad_[i] +
                     a.value_ * b.hess_[p];
    }
  }
  return out;
}

DualTaylor reciprocal(const DualTaylor& a) {
  const double v = a.value();
  if (!(std::abs(v) >= taylor_limits().denominator_floor)) {
    throw DivisionSingularity("DualTaylor division: denominator magnitude below floor");
  }
  const double r = 1.0 / v;
  return chain(a, r, -r * r, 2.0 * r * r * r);
}

DualTaylor operator/(const DualTaylor& a, const DualTaylor& b) { return a * reciprocal(b); }

DualTaylor operator+(const DualTaylor& a, double s) {
  DualTaylor out = a;
  out += s;
  return out;
}
DualTaylor operator+(double s, const DualTaylor& a) { return a + s; }
DualTaylor operator-(const DualTaylor& a, double s) { return a + (-s); }
DualTaylor operator-(double s, const DualTaylor& a) { return (-a) + s; }

DualTaylor operator*(const DualTaylor& a, double s) {
  DualTaylor out = a;
  out *= s;
  return out;
}
DualTaylor operator*(double s, const DualTaylor& a) { return a * s; }

DualTaylor operator/(const DualTaylor& a, double s) {
  if (!(std::abs(s) >= taylor_limits().denominator_floor)) {
    throw DivisionSingularity("DualTaylor division: denominator magnitude below floor");
  }
  return a * (1.0 / s);
}

DualTaylor operator/(double s, const DualTaylor& a) { return reciprocal(a) * s; }

DualTaylor tanh(const DualTaylor& a) {
  require_finite(a.value(), "tanh");
  const double t = std::tanh(a.value());
  const double s = 1.0 - t * t;
  return chain(a, t, s, -2.0 * t * s);
}

DualTaylor sin(const DualTaylor& a) {
  require_finite(a.value(), "sin");
  const double sv = std::sin(a.value());
  return chain(a, sv, std::cos(a.value()), -sv);
}

DualTaylor cos(const DualTaylor& a) {
  require_finite(a.value(), "cos");
  const double cv = std::cos(a.value());
  return chain(a, cv, -std::sin(a.value()), -cv);
}

DualTaylor exp(const DualTaylor& a) {
  check_exp_argument(a.value(), "exp");
  const double e = std::exp(a.value());
  return chain(a, e, e, e);
}

DualTaylor sinh(const DualTaylor& a) {
  check_exp_argument(a.value(), "sinh");
  const double sh = std::sinh(a.value());
  const double ch = std::cosh(a.value());
  return chain(a, sh, ch, sh);
}

DualTaylor cosh(const DualTaylor& a) {
  check_exp_argument(a.value(), "cosh");
  const double sh = std::sinh(a.value());
  const double ch = std::cosh(a.value());
  return chain(a, ch, sh, ch);
}

}  // namespace caml::ad
