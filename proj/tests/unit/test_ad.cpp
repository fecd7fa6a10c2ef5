#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "caml/ad/dual_taylor.hpp"
#include "caml/ad/param_tape.hpp"
#include "caml/error.hpp"
#include "caml/nn/mlp.hpp"
#include "doctest.h"

using namespace caml;
using ad::DualTaylor;

namespace {

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

/// A random straight-line program over two inputs. Each step combines earlier
/// slots with a primitive whose arguments stay in a numerically tame range.
struct RandomProgram {
  struct Step {
    int op;
    int a;
    int b;
    double k;
  };
  std::vector<Step> steps;

  RandomProgram(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> op(0, 8);
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    for (int s = 0; s < depth; ++s) {
      const int slots = 2 + s;
      std::uniform_int_distribution<int> pick(0, slots - 1);
      steps.push_back({op(rng), pick(rng), pick(rng), coef(rng)});
    }
  }

  template <class T>
  T eval(const T& x, const T& y) const {
    using std::cos;
    using std::exp;
    using std::sin;
    using std::tanh;
    using ad::cos;
    using ad::exp;
    using ad::sin;
    using ad::tanh;
    std::vector<T> v{x, y};
    for (const Step& s : steps) {
      const T& a = v[s.a];
      const T& b = v[s.b];
      switch (s.op) {
        case 0: v.push_back(a + b * s.k); break;
        case 1: v.push_back(a * b); break;
        case 2: v.push_back(a / (sin(b) * 0.5 + 2.0)); break;
        case 3: v.push_back(tanh(a * s.k)); break;
        case 4: v.push_back(sin(a)); break;
        case 5: v.push_back(cos(a + b)); break;
        case 6: v.push_back(exp(tanh(a))); break;
        case 7: v.push_back(a - b); break;
        default: v.push_back(-a * s.k); break;
      }
    }
    return v.back();
  }
};

}  // namespace

TEST_CASE("seed_inputs places unit gradients") {
  const auto one = ad::seed_inputs(std::vector<double>{2.0});
  CHECK(one[0].value() == 2.0);
  CHECK(one[0].grad(0) == 1.0);
  CHECK(one[0].hess(0, 0) == 0.0);
  const auto two = ad::seed_inputs(std::vector<double>{0.5, 0.25});
  CHECK(two[0].grad(0) == 1.0);
  CHECK(two[0].grad(1) == 0.0);
  CHECK(two[1].grad(0) == 0.0);
  CHECK(two[1].grad(1) == 1.0);
  CHECK_THROWS_AS(ad::seed_inputs(std::vector<double>{}), ContractViolation);
}

TEST_CASE("Taylor arithmetic hand values") {
  const DualTaylor x = DualTaylor::variable(1, 0, 2.0);
  const DualTaylor sq = x * x;
  CHECK(sq.value() == 4.0);
  CHECK(sq.grad(0) == 4.0);
  CHECK(sq.hess(0, 0) == 2.0);

  const auto xy = ad::seed_inputs(std::vector<double>{2.0, 3.0});
  const DualTaylor p = xy[0] * xy[1];
  CHECK(p.value() == 6.0);
  CHECK(p.grad(0) == 3.0);
  CHECK(p.grad(1) == 2.0);
  CHECK(p.hess(0, 1) == 1.0);
  CHECK(p.hess(0, 0) == 0.0);

  const DualTaylor z = xy[0] + (-xy[0]);
  CHECK(z.value() == 0.0);
  CHECK(z.grad(0) == 0.0);
  CHECK(z.hess(0, 0) == 0.0);
}

TEST_CASE("univariate primitives at landmark points") {
  const DualTaylor t = ad::tanh(DualTaylor::variable(1, 0, 0.0));
  CHECK(t.value() == 0.0);
  CHECK(t.grad(0) == 1.0);
  CHECK(t.hess(0, 0) == 0.0);
  const DualTaylor s0 = ad::sin(DualTaylor::variable(1, 0, 0.0));
  CHECK(s0.value() == 0.0);
  CHECK(s0.grad(0) == 1.0);
  CHECK(s0.hess(0, 0) == 0.0);
  const DualTaylor s1 = ad::sin(DualTaylor::variable(1, 0, std::numbers::pi / 2));
  CHECK(s1.value() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(s1.grad(0)) < 1e-15);
  CHECK(s1.hess(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("guards: division floor and exp bound") {
  const DualTaylor x = DualTaylor::variable(1, 0, 1.0);
  CHECK_THROWS_AS(x / DualTaylor(1, 0.0), DivisionSingularity);
  CHECK_THROWS_AS(ad::exp(DualTaylor(1, 701.0)), OverflowError);
  CHECK_THROWS_AS(ad::sinh(DualTaylor(1, -701.0)), OverflowError);
  CHECK_NOTHROW(ad::exp(DualTaylor(1, 699.0)));
  CHECK_THROWS_AS(DualTaylor(4, 0.0), ContractViolation);
  CHECK_THROWS_AS(x + DualTaylor(2, 0.0), ContractViolation);
}

TEST_CASE("random expression trees match finite differences") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> in(-2.0, 2.0);
  std::uniform_int_distribution<int> depth(1, 8);
  for (int trial = 0; trial < 300; ++trial) {
    const RandomProgram prog(rng, depth(rng));
    const double x0 = in(rng), y0 = in(rng);
    const auto seeds = ad::seed_inputs(std::vector<double>{x0, y0});
    const DualTaylor out = prog.eval(seeds[0], seeds[1]);
    auto f = [&](double x, double y) { return prog.eval(x, y); };
    CHECK(out.value() == doctest::Approx(f(x0, y0)).epsilon(1e-14));

    const double h1 = 1e-5;
    const double gx = (f(x0 + h1, y0) - f(x0 - h1, y0)) / (2 * h1);
    const double gy = (f(x0, y0 + h1) - f(x0, y0 - h1)) / (2 * h1);
    CHECK(close_rel(out.grad(0), gx, 1e-6));
    CHECK(close_rel(out.grad(1), gy, 1e-6));

    const double h2 = 1e-3;
    const double c = f(x0, y0);
    const double hxx = (f(x0 + h2, y0) - 2 * c + f(x0 - h2, y0)) / (h2 * h2);
    const double hyy = (f(x0, y0 + h2) - 2 * c + f(x0, y0 - h2)) / (h2 * h2);
    const double hxy = (f(x0 + h2, y0 + h2) - f(x0 + h2, y0 - h2) - f(x0 - h2, y0 + h2) +
                        f(x0 - h2, y0 - h2)) /
                       (4 * h2 * h2);
    CHECK(close_rel(out.hess(0, 0), hxx, 1e-4));
    CHECK(close_rel(out.hess(1, 1), hyy, 1e-4));
    CHECK(close_rel(out.hess(0, 1), hxy, 1e-4));
  }
}

TEST_CASE("linearity and determinism") {
  std::mt19937_64 rng(7);
  const RandomProgram f(rng, 6), g(rng, 6);
  const auto s = ad::seed_inputs(std::vector<double>{0.3, -1.1});
  const DualTaylor fv = f.eval(s[0], s[1]);
  const DualTaylor gv = g.eval(s[0], s[1]);
  const DualTaylor combo = fv * 2.5 + gv * -0.75;
  for (int k = 0; k < 2; ++k) {
    CHECK(combo.grad(k) == doctest::Approx(2.5 * fv.grad(k) - 0.75 * gv.grad(k)).epsilon(1e-15));
  }
  CHECK(combo.hess(0, 1) == doctest::Approx(2.5 * fv.hess(0, 1) - 0.75 * gv.hess(0, 1)).epsilon(1e-15));
  const DualTaylor again = f.eval(s[0], s[1]);
  CHECK(again.value() == fv.value());
  CHECK(again.grad(1) == fv.grad(1));
  CHECK(again.hess(0, 1) == fv.hess(0, 1));
}

TEST_CASE("grad_wrt_params hand examples") {
  const std::vector<double> theta{3.0};
  const auto g = ad::grad_wrt_params(
      [](ad::ParamTape&, std::span<const ad::TVar> p) { return p[0] * p[0]; }, theta, 1);
  CHECK(g[0] == 6.0);

  const std::vector<double> theta4{0.1, -2.0, 5.0, 1e3};
  const auto ones = ad::grad_wrt_params(
      [](ad::ParamTape&, std::span<const ad::TVar> p) { return p[0] + p[1] + p[2] + p[3]; },
      theta4, 2);
  for (double v : ones) CHECK(v == 1.0);
}

TEST_CASE("grad_wrt_params flags blow-ups with the step index") {
  const std::vector<double> theta{0.0};
  try {
    ad::grad_wrt_params(
        [](ad::ParamTape& t, std::span<const ad::TVar> p) {
          return p[0] * t.constant(std::numeric_limits<double>::infinity());
        },
        theta, 1, 17);
    FAIL("expected NumericalBlowup");
  } catch (const NumericalBlowup& e) {
    CHECK(e.step() == 17);
  }
}

TEST_CASE("tape gradient of a PDE-style loss matches finite differences") {
  // Loss mixes value, gradient and Hessian channels of a 2-layer network at
  // several points, including a product of derivative terms.
  nn::MlpSpec spec{.input_dim = 2, .output_dim = 1, .hidden_layers = 2, .hidden_width = 6};
  auto theta = nn::init_params(spec, 11);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& t : theta) t += u(rng);
  const std::vector<std::array<double, 2>> pts{{0.2, 0.7}, {-0.4, 0.1}, {0.9, -0.3}};

  auto loss_tape = [&](ad::ParamTape& tape, std::span<const ad::TVar> p) {
    ad::TVar total = tape.constant(0.0);
    for (const auto& x : pts) {
      const ad::TVar out = nn::forward_tape(tape, p, spec, x)[0];
      const ad::TVar lap = tape.hess_of(out, 0, 0) + tape.hess_of(out, 1, 1);
      const ad::TVar r = lap + tape.value_of(out) * tape.grad_of(out, 0) + tape.hess_of(out, 0, 1) - 0.3;
      total = total + r * r + ad::sin(tape.grad_of(out, 1));
    }
    return total;
  };
  auto loss_plain = [&](const std::vector<double>& th) {
    double total = 0.0;
    for (const auto& x : pts) {
      const auto s = ad::seed_inputs(std::vector<double>{x[0], x[1]});
      const DualTaylor out = nn::forward(th, spec, s)[0];
      const double r = out.laplacian() + out.value() * out.grad(0) + out.hess(0, 1) - 0.3;
      total += r * r + std::sin(out.grad(1));
    }
    return total;
  };

  const auto g = ad::grad_wrt_params(loss_tape, theta, 2);
  const double h = 1e-5;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    const double fd = (loss_plain(tp) - loss_plain(tm)) / (2 * h);
    CHECK(close_rel(g[k], fd, 1e-6));
  }
  const auto g2 = ad::grad_wrt_params(loss_tape, theta, 2);
  CHECK(g == g2);
}

TEST_CASE("tape unary primitives match finite differences") {
  // exp, sinh, cosh, cos and division exercise every unary adjoint rule.
  const std::vector<double> theta{0.3, -0.7, 0.5};
  auto build = [](auto& ops, auto p0, auto p1, auto p2, auto x, auto y) {
    auto a = p0 * x + p1 * y;
    auto b = ops.exp(a) + ops.sinh(p2 * x) * ops.cosh(p1 * y) + ops.cos(a * y);
    return b / (ops.sin(p2 + x) * 0.3 + 2.0);
  };
  struct TapeOps {
    ad::TVar exp(ad::TVar v) { return ad::exp(v); }
    ad::TVar sinh(ad::TVar v) { return ad::sinh(v); }
    ad::TVar cosh(ad::TVar v) { return ad::cosh(v); }
    ad::TVar cos(ad::TVar v) { return ad::cos(v); }
    ad::TVar sin(ad::TVar v) { return ad::sin(v); }
  };
  struct JetOps {
    DualTaylor exp(const DualTaylor& v) { return ad::exp(v); }
    DualTaylor sinh(const DualTaylor& v) { return ad::sinh(v); }
    DualTaylor cosh(const DualTaylor& v) { return ad::cosh(v); }
    DualTaylor cos(const DualTaylor& v) { return ad::cos(v); }
    DualTaylor sin(const DualTaylor& v) { return ad::sin(v); }
  };
  auto tape_loss = [&](ad::ParamTape& tape, std::span<const ad::TVar> p) {
    TapeOps ops;
    const ad::TVar f = build(ops, p[0], p[1], p[2], tape.input(0, 0.4), tape.input(1, -0.6));
    return tape.hess_of(f, 0, 1) * 2.0 + tape.hess_of(f, 0, 0) * tape.grad_of(f, 1) + tape.value_of(f);
  };
  auto plain_loss = [&](const std::vector<double>& th) {
    JetOps ops;
    const auto s = ad::seed_inputs(std::vector<double>{0.4, -0.6});
    const DualTaylor p0(2, th[0]), p1(2, th[1]), p2(2, th[2]);
    const DualTaylor f = build(ops, p0, p1, p2, s[0], s[1]);
    return f.hess(0, 1) * 2.0 + f.hess(0, 0) * f.grad(1) + f.value();
  };
  const auto g = ad::grad_wrt_params(tape_loss, theta, 2);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto tp = theta, tm = theta;
    tp[k] += 1e-5;
    tm[k] -= 1e-5;
    CHECK(close_rel(g[k], (plain_loss(tp) - plain_loss(tm)) / 2e-5, 1e-6));
  }
}
