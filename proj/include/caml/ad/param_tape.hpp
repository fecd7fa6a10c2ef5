#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "caml/ad/dual_taylor.hpp"

namespace caml::ad {

class ParamTape;

/// Handle to a node on a ParamTape. Cheap to copy; valid while its tape lives.
class TVar {
 public:
  TVar() = default;
  const DualTaylor& value() const;
  ParamTape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class ParamTape;
  TVar(ParamTape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
  ParamTape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode tape over network parameters whose node values are spatial
/// Taylor jets. One forward recording followed by one backward sweep yields
/// d(loss)/d(theta_k) for any loss built from values, gradients and Hessians
/// of the recorded fields.
class ParamTape {
 public:
  ParamTape(std::span<const double> theta, int spatial_dim);

  int spatial_dim() const { return dim_; }
  std::size_t num_params() const { return theta_.size(); }
  std::size_t size() const { return nodes_.size(); }

  TVar param(std::size_t k);
  TVar constant(double v);
  TVar constant(const DualTaylor& v);
  /// Seeded spatial coordinate x_k (unit gradient along k).
  TVar input(int k, double xk);

  TVar add(TVar a, TVar b);
  TVar sub(TVar a, TVar b);
  TVar mul(TVar a, TVar b);
  TVar div(TVar a, TVar b);
  TVar neg(TVar a);
  TVar scale(TVar a, double s);
  TVar shift(TVar a, double s);
  TVar tanh(TVar a);
  TVar sin(TVar a);
  TVar cos(TVar a);
  TVar exp(TVar a);
  TVar sinh(TVar a);
  TVar cosh(TVar a);

  /// Lift one jet component to a spatially constant node: the value,
  /// d/dx_k, or d2/dx_i dx_j of `a`. Losses are assembled from these.
  TVar value_of(TVar a);
  TVar grad_of(TVar a, int k);
  TVar hess_of(TVar a, int i, int j);

  const DualTaylor& value(TVar v) const { return nodes_[v.id()].value; }

  /// Backward sweep seeded with d(root.value)/d(root.value) = 1. Returns the
  /// adjoint buffer, one entry per parameter.
  std::vector<double> gradient(TVar root) const;

 private:
  enum class Op : std::uint8_t {
    kParam,
    kConstant,
    kAdd,
    kMul,
    kScale,
    kShift,
    kUnary,
    kComponent,
  };

  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double s = 0.0;   // scale factor, or unary f'
    double s2 = 0.0;  // unary f''
    double s3 = 0.0;  // unary f'''
    int component = 0;
    std::size_t param = 0;
    DualTaylor value;
  };

  TVar push(Node node);
  TVar unary(TVar a, const DualTaylor& value, double f1, double f2, double f3);
  TVar component(TVar a, int which);
  void check(TVar a) const;

  std::vector<double> theta_;
  int dim_;
  std::vector<Node> nodes_;
};

TVar operator+(TVar a, TVar b);
TVar operator-(TVar a, TVar b);
TVar operator*(TVar a, TVar b);
TVar operator/(TVar a, TVar b);
TVar operator-(TVar a);
TVar operator*(TVar a, double s);
TVar operator*(double s, TVar a);
TVar operator+(TVar a, double s);
TVar operator+(double s, TVar a);
TVar operator-(TVar a, double s);
TVar operator-(double s, TVar a);
TVar tanh(TVar a);
TVar sin(TVar a);
TVar cos(TVar a);
TVar exp(TVar a);
TVar sinh(TVar a);
TVar cosh(TVar a);

using TapeLoss = std::function<TVar(ParamTape& tape, std::span<const TVar> params)>;

/// d(loss)/d(theta). Any offset c inside the loss enters as a tape constant and
/// therefore receives no gradient. Throws NumericalBlowup (carrying `step`)
/// when the loss or the gradient is non-finite.
std::vector<double> grad_wrt_params(const TapeLoss& loss_eval, std::span<const double> theta,
                                    int spatial_dim, long step = 0);

}  // namespace caml::ad
