#include "caml/ad/param_tape.hpp"

#include <array>
#include <cmath>

#include "caml/error.hpp"

namespace caml::ad {

namespace {

struct Adjoint {
  double v = 0.0;
  std::array<double, DualTaylor::kMaxDim> g{};
  std::array<double, DualTaylor::kMaxHess> h{};
};

void accumulate(Adjoint& dst, const Adjoint& src, int dim, double w) {
  dst.v += w * src.v;
  for (int k = 0; k < dim; ++k) dst.g[k] += w * src.g[k];
  for (int p = 0; p < hess_size(dim); ++p) dst.h[p] += w * src.h[p];
}

/// Adjoint contribution of a factor `x` to a product whose other factor is `y`.
void product_adjoint(Adjoint& x_bar, const Adjoint& o, const DualTaylor& y, int dim) {
  x_bar.v += o.v * y.value();
  for (int k = 0; k < dim; ++k) {
    x_bar.v += o.g[k] * y.grad(k);
    x_bar.g[k] += o.g[k] * y.value();
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const int p = hess_index(dim, i, j);
      x_bar.v += o.h[p] * y.hess(i, j);
      x_bar.h[p] += o.h[p] * y.value();
      x_bar.g[i] += o.h[p] * y.grad(j);
      x_bar.g[j] += o.h[p] * y.grad(i);
    }
  }
}

}  // namespace

const DualTaylor& TVar::value() const {
  if (tape_ == nullptr) throw ContractViolation("TVar: not attached to a tape");
  return tape_->value(*this);
}

ParamTape::ParamTape(std::span<const double> theta, int spatial_dim)
    : theta_(theta.begin(), theta.end()), dim_(spatial_dim) {
  if (spatial_dim < 1 || spatial_dim > DualTaylor::kMaxDim) {
    throw ContractViolation("ParamTape: spatial dimension must be in [1, 3]");
  }
}

TVar ParamTape::push(Node node) {
  nodes_.push_back(std::move(node));
  return TVar(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void ParamTape::check(TVar a) const {
  if (a.tape() != this || a.id() >= nodes_.size()) {
    throw ContractViolation("ParamTape: variable belongs to a different tape");
  }
}

TVar ParamTape::param(std::size_t k) {
  if (k >= theta_.size()) throw ContractViolation("ParamTape: parameter index out of range");
  Node n{.op = Op::kParam, .param = k, .value = DualTaylor(dim_, theta_[k])};
  return push(std::move(n));
}

TVar ParamTape::constant(double v) { return constant(DualTaylor(dim_, v)); }

TVar ParamTape::constant(const DualTaylor& v) {
  if (v.dim() != dim_) throw ContractViolation("ParamTape: constant has wrong dimension");
  return push(Node{.op = Op::kConstant, .value = v});
}

TVar ParamTape::input(int k, double xk) { return constant(DualTaylor::variable(dim_, k, xk)); }

TVar ParamTape::add(TVar a, TVar b) {
  check(a);
  check(b);
  return push(Node{.op = Op::kAdd, .a = a.id(), .b = b.id(), .value = value(a) + value(b)});
}

TVar ParamTape::sub(TVar a, TVar b) { return add(a, neg(b)); }

TVar ParamTape::mul(TVar a, TVar b) {
  check(a);
  check(b);
  return push(Node{.op = Op::kMul, .a = a.id(), .b = b.id(), .value = value(a) * value(b)});
}

TVar ParamTape::div(TVar a, TVar b) {
  check(b);
  const DualTaylor& bv = value(b);
  const DualTaylor r = reciprocal(bv);
  const double inv = 1.0 / bv.value();
  TVar rb = unary(b, r, -inv * inv, 2.0 * inv * inv * inv, -6.0 * inv * inv * inv * inv);
  return mul(a, rb);
}

TVar ParamTape::neg(TVar a) { return scale(a, -1.0); }

TVar ParamTape::scale(TVar a, double s) {
  check(a);
  return push(Node{.op = Op::kScale, .a = a.id(), .s = s, .value = value(a) * s});
}

TVar ParamTape::shift(TVar a, double s) {
  check(a);
  return push(Node{.op = Op::kShift, .a = a.id(), .value = value(a) + s});
}

TVar ParamTape::unary(TVar a, const DualTaylor& v, double f1, double f2, double f3) {
  check(a);
  return push(Node{.op = Op::kUnary, .a = a.id(), .s = f1, .s2 = f2, .s3 = f3, .value = v});
}

TVar ParamTape::tanh(TVar a) {
  check(a);
  const DualTaylor v = ad::tanh(value(a));
  const double t = v.value();
  const double s = 1.0 - t * t;
  return unary(a, v, s, -2.0 * t * s, -2.0 * s * s + 4.0 * t * t * s);
}

TVar ParamTape::sin(TVar a) {
  check(a);
  const DualTaylor v = ad::sin(value(a));
  const double c = std::cos(value(a).value());
  return unary(a, v, c, -v.value(), -c);
}

TVar ParamTape::cos(TVar a) {
  check(a);
  const DualTaylor v = ad::cos(value(a));
  const double s = std::sin(value(a).value());
  return unary(a, v, -s, -v.value(), s);
}

TVar ParamTape::exp(TVar a) {
  check(a);
  const DualTaylor v = ad::exp(value(a));
  return unary(a, v, v.value(), v.value(), v.value());
}

TVar ParamTape::sinh(TVar a) {
  check(a);
  const DualTaylor v = ad::sinh(value(a));
  const double ch = std::cosh(value(a).value());
  return unary(a, v, ch, v.value(), ch);
}

TVar ParamTape::cosh(TVar a) {
  check(a);
  const DualTaylor v = ad::cosh(value(a));
  const double sh = std::sinh(value(a).value());
  return unary(a, v, sh, v.value(), sh);
}

TVar ParamTape::component(TVar a, int which) {
  check(a);
  const DualTaylor& av = value(a);
  double c = 0.0;
  if (which == 0) {
    c = av.value();
  } else if (which <= dim_) {
    c = av.grad(which - 1);
  } else {
    c = av.hess_packed()[static_cast<std::size_t>(which - 1 - dim_)];
  }
  return push(Node{.op = Op::kComponent, .a = a.id(), .component = which, .value = DualTaylor(dim_, c)});
}

TVar ParamTape::value_of(TVar a) { return component(a, 0); }

TVar ParamTape::grad_of(TVar a, int k) {
  if (k < 0 || k >= dim_) throw ContractViolation("grad_of: coordinate out of range");
  return component(a, 1 + k);
}

TVar ParamTape::hess_of(TVar a, int i, int j) {
  if (i < 0 || j < 0 || i >= dim_ || j >= dim_) {
    throw ContractViolation("hess_of: coordinate out of range");
  }
  return component(a, 1 + dim_ + hess_index(dim_, i, j));
}

std::vector<double> ParamTape::gradient(TVar root) const {
  check(root);
  std::vector<double> grad(theta_.size(), 0.0);
  std::vector<Adjoint> adj(root.id() + 1);
  adj[root.id()].v = 1.0;
  const int d = dim_;
  for (std::size_t idx = root.id() + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    const Adjoint o = adj[idx];
    switch (n.op) {
      case Op::kParam:
        grad[n.param] += o.v;
        break;
      case Op::kConstant:
        break;
      case Op::kAdd:
        accumulate(adj[n.a], o, d, 1.0);
        accumulate(adj[n.b], o, d, 1.0);
        break;
      case Op::kScale:
        accumulate(adj[n.a], o, d, n.s);
        break;
      case Op::kShift:
        accumulate(adj[n.a], o, d, 1.0);
        break;
      case Op::kMul:
        product_adjoint(adj[n.a], o, nodes_[n.b].value, d);
        product_adjoint(adj[n.b], o, nodes_[n.a].value, d);
        break;
      case Op::kUnary: {
        const DualTaylor& x = nodes_[n.a].value;
        Adjoint& xb = adj[n.a];
        const double f1 = n.s, f2 = n.s2, f3 = n.s3;
        xb.v += f1 * o.v;
        for (int k = 0; k < d; ++k) {
          xb.v += f2 * o.g[k] * x.grad(k);
          xb.g[k] += f1 * o.g[k];
        }
        for (int i = 0; i < d; ++i) {
          for (int j = i; j < d; ++j) {
            const int p = hess_index(d, i, j);
            xb.v += o.h[p] * (f3 * x.grad(i) * x.grad(j) + f2 * x.hess(i, j));
            xb.h[p] += f1 * o.h[p];
            xb.g[i] += f2 * o.h[p] * x.grad(j);
            xb.g[j] += f2 * o.h[p] * x.grad(i);
          }
        }
        break;
      }
      case Op::kComponent: {
        Adjoint& xb = adj[n.a];
        if (n.component == 0) {
          xb.v += o.v;
        } else if (n.component <= d) {
          xb.g[n.component - 1] += o.v;
        } else {
          xb.h[n.component - 1 - d] += o.v;
        }
        break;
      }
    }
  }
  return grad;
}

TVar operator+(TVar a, TVar b) { return a.tape()->add(a, b); }
TVar operator-(TVar a, TVar b) { return a.tape()->sub(a, b); }
TVar operator*(TVar a, TVar b) { return a.tape()->mul(a, b); }
TVar operator/(TVar a, TVar b) { return a.tape()->div(a, b); }
TVar operator-(TVar a) { return a.tape()->neg(a); }
TVar operator*(TVar a, double s) { return a.tape()->scale(a, s); }
TVar operator*(double s, TVar a) { return a.tape()->scale(a, s); }
TVar operator+(TVar a, double s) { return a.tape()->shift(a, s); }
TVar operator+(double s, TVar a) { return a.tape()->shift(a, s); }
TVar operator-(TVar a, double s) { return a.tape()->shift(a, -s); }
TVar operator-(double s, TVar a) { return a.tape()->shift(a.tape()->neg(a), s); }
TVar tanh(TVar a) { return a.tape()->tanh(a); }
TVar sin(TVar a) { return a.tape()->sin(a); }
TVar cos(TVar a) { return a.tape()->cos(a); }
TVar exp(TVar a) { return a.tape()->exp(a); }
TVar sinh(TVar a) { return a.tape()->sinh(a); }
TVar cosh(TVar a) { return a.tape()->cosh(a); }

std::vector<double> grad_wrt_params(const TapeLoss& loss_eval, std::span<const double> theta,
                                    int spatial_dim, long step) {
  ParamTape tape(theta, spatial_dim);
  std::vector<TVar> params;
  params.reserve(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) params.push_back(tape.param(k));
  const TVar loss = loss_eval(tape, params);
  if (!std::isfinite(loss.value().value())) {
    throw NumericalBlowup("grad_wrt_params: non-finite loss", step);
  }
  std::vector<double> grad = tape.gradient(loss);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (!std::isfinite(grad[k])) {
      throw NumericalBlowup("grad_wrt_params: non-finite gradient", step, static_cast<long>(k));
    }
  }
  return grad;
}

}  // namespace caml::ad
