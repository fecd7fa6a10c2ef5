#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "caml/diag/gradient_metrics.hpp"
#include "caml/diag/hessian.hpp"
#include "caml/diag/landscape.hpp"
#include "caml/diag/slice.hpp"
#include "caml/error.hpp"
#include "doctest.h"

using namespace caml;
using namespace caml::diag;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Eigen::MatrixXd random_orthonormal(std::mt19937_64& rng, int d, int k) {
  Eigen::MatrixXd m(d, k);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
}

}  // namespace

TEST_CASE("gradient cosine") {
  const std::vector<double> a{1, 2, 3}, b{-1, -2, -3};
  CHECK(grad_cosine(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(grad_cosine(a, b) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(grad_cosine(std::vector<double>{1, 2}, std::vector<double>{2, -1}) == 0.0);
  CHECK(std::isnan(grad_cosine(a, std::vector<double>{0, 0, 0})));
  CHECK_THROWS_AS(grad_cosine(a, std::vector<double>{1, 2}), ContractViolation);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto g1 = random_vec(rng, 40), g2 = random_vec(rng, 40);
    const double c = grad_cosine(g1, g2);
    for (double& x : g1) x *= 3.7;
    for (double& x : g2) x *= 0.02;
    CHECK(std::abs(grad_cosine(g1, g2) - c) < 1e-14);
  }
}

TEST_CASE("positive cosine fraction") {
  CHECK(positive_cos_fraction(std::vector<double>{0.1, 0.5, 0.9}) == 1.0);
  CHECK(positive_cos_fraction(std::vector<double>{0.3, -0.2, 0.4, -0.1}) == 0.5);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(positive_cos_fraction(std::vector<double>{0.3, nan, -0.2, nan}) == 0.5);
  CHECK(positive_cos_fraction(std::vector<double>{0.0, -1.0}) == 0.0);
  CHECK(std::isnan(positive_cos_fraction(std::vector<double>{nan})));
}

TEST_CASE("gradient norm ratio") {
  const std::vector<double> g{3, 4};
  CHECK(grad_norm_ratio(g, g) == 1.0);
  CHECK(grad_norm_ratio(std::vector<double>{9, 12}, g) == doctest::Approx(3.0));
  CHECK(grad_norm_ratio(std::vector<double>{0, 0}, g) == 0.0);
  CHECK(std::isinf(grad_norm_ratio(g, std::vector<double>{0, 0})));
  CHECK(l2_distance(g, std::vector<double>{0, 0}) == 5.0);
}

TEST_CASE("FD Hessian on quadratics") {
  const LossEval diag14 = [](std::span<const double> t) { return 0.5 * (t[0] * t[0] + 4 * t[1] * t[1]); };
  const HessianReport r = fd_hessian(diag14, std::vector<double>{0.3, -0.7}, 1e-3, 1);
  CHECK(r.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.eigenvalues(1) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.kappa == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(std::abs(r.low_curvature(0, 0)) == doctest::Approx(1.0).epsilon(1e-6));

  const LossEval ident = [](std::span<const double> t) {
    double s = 0;
    for (double x : t) s += 0.5 * x * x;
    return s;
  };
  CHECK(fd_hessian(ident, std::vector<double>(5, 1.0), 1e-3, 2).kappa == doctest::Approx(1.0).epsilon(1e-6));

  // Random dense SPD quadratic.
  std::mt19937_64 rng(9);
  Eigen::MatrixXd m(6, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m(i, j) = g(rng);
  const Eigen::MatrixXd a = m * m.transpose() + Eigen::MatrixXd::Identity(6, 6);
  const LossEval quad = [&](std::span<const double> t) {
    const Eigen::Map<const Eigen::VectorXd> v(t.data(), 6);
    return 0.5 * v.dot(a * v);
  };
  const Eigen::MatrixXd h = fd_hessian_matrix(quad, random_vec(rng, 6), 1e-3);
  CHECK((h - a).norm() / a.norm() < 1e-6);

  const GradEval grad = [&](std::span<const double> t, std::span<double> out) {
    const Eigen::Map<const Eigen::VectorXd> v(t.data(), 6);
    Eigen::Map<Eigen::VectorXd>(out.data(), 6) = a * v;
  };
  CHECK((fd_hessian_from_gradient(grad, random_vec(rng, 6), 1e-3) - a).norm() / a.norm() < 1e-10);

  CHECK_THROWS_AS(analyze_hessian(a, 7), ContractViolation);
  CHECK_THROWS_AS(analyze_hessian(a, 0), ContractViolation);

  Eigen::VectorXd singular(3);
  singular << 0.0, 1.0, 5.0;
  CHECK(std::isinf(condition_number(singular)));
  Eigen::VectorXd signed_spec(2);
  signed_spec << -2.0, 8.0;
  CHECK(condition_number(signed_spec) == 4.0);

  std::ostringstream csv;
  write_hessian_csv(csv, r);
  CHECK(csv.str().rfind("index,eigenvalue\n0,", 0) == 0);
}

TEST_CASE("subspace similarity") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd v = random_orthonormal(rng, 12, 3);
  CHECK(subspace_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-14));

  const Eigen::MatrixXd full = random_orthonormal(rng, 12, 6);
  const Eigen::MatrixXd a = full.leftCols(3), b = full.rightCols(3);
  CHECK(subspace_similarity(a, b) < 1e-14);

  const Eigen::MatrixXd w = random_orthonormal(rng, 12, 3);
  CHECK(subspace_similarity(v, w) == doctest::Approx(subspace_similarity(w, v)).epsilon(1e-14));
  // Rotating within the subspace leaves the score unchanged.
  const Eigen::MatrixXd rot = random_orthonormal(rng, 3, 3);
  CHECK(std::abs(subspace_similarity(v * rot, w) - subspace_similarity(v, w)) < 1e-10);

  CHECK_THROWS_AS(subspace_similarity(2.0 * v, w), ContractViolation);
  CHECK_THROWS_AS(subspace_similarity(v, full), ContractViolation);
}

TEST_CASE("slice plane construction") {
  const Eigen::VectorXd o = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0), e2 = Eigen::VectorXd::Unit(3, 1);
  const SlicePlane p = build_slice_plane(o, 2.0 * e1, e2 + 0.5 * e1);
  CHECK((p.d1 - e1).norm() < 1e-15);
  CHECK((p.d2 - e2).norm() < 1e-15);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    auto a = random_vec(rng, 20), b = random_vec(rng, 20), c = random_vec(rng, 20);
    const SlicePlane q = build_slice_plane(Eigen::Map<Eigen::VectorXd>(a.data(), 20),
                                           Eigen::Map<Eigen::VectorXd>(b.data(), 20),
                                           Eigen::Map<Eigen::VectorXd>(c.data(), 20));
    CHECK(std::abs(q.d1.dot(q.d2)) < 1e-12);
    CHECK(std::abs(q.d1.norm() - 1.0) < 1e-12);
    CHECK(std::abs(q.d2.norm() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(build_slice_plane(o, e1, 3.0 * e1), DegeneratePlane);
  CHECK_THROWS_AS(build_slice_plane(o, o, e2), DegeneratePlane);
}

TEST_CASE("slice evaluation") {
  const Eigen::VectorXd a0 = Eigen::Vector3d(1, 2, 3);
  const SlicePlane p = build_slice_plane(a0, Eigen::Vector3d(2, 2, 3), Eigen::Vector3d(1, 5, 3));
  const LossEval loss = [](std::span<const double> t) { return t[0] * t[0] + t[1] + t[2]; };
  const SliceGrid g = evaluate_slice(p, loss, 5, {-1, 1}, {-2, 2});
  REQUIRE(g.loss.rows() == 5);
  REQUIRE(g.loss.cols() == 5);
  CHECK(g.loss(2, 2) == loss(std::vector<double>{1, 2, 3}));
  CHECK(g.alpha.front() == -1.0);
  CHECK(g.beta.back() == 2.0);

  const LossEval bad = [](std::span<const double> t) { return t[0] > 1.5 ? std::log(-1.0) : 1.0; };
  const SliceGrid gb = evaluate_slice(p, bad, 3, {-1, 1}, {-1, 1});
  CHECK(std::isnan(gb.loss(2, 0)));
  std::ostringstream csv;
  write_slice_csv(csv, gb);
  std::string line;
  std::istringstream in(csv.str());
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 9);
  CHECK(csv.str().rfind("alpha,beta,loss,log10_loss\n", 0) == 0);
}

TEST_CASE("function-space valley") {
  const Poisson1D problem(100);
  const ValleyConfig cfg;
  const ValleyReport r = function_space_valley(problem, cfg);
  REQUIRE(r.hessians.size() == 3);
  for (const HessianReport& h : r.hessians) {
    CHECK(std::isinf(h.kappa));
    const double lmax = h.eigenvalues.cwiseAbs().maxCoeff();
    // The constant direction is (numerically) in the null space.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(100) / 10.0;
    const Eigen::MatrixXd& v = h.eigenvectors;
    const Eigen::VectorXd coeffs = v.transpose() * ones;
    const double rayleigh = (coeffs.array().square() * h.eigenvalues.array()).sum();
    CHECK(std::abs(rayleigh) < 1e-8 * lmax);
    CHECK(std::abs(h.eigenvalues.cwiseAbs().minCoeff()) < 1e-8 * lmax);
  }
  // The residual loss is flat along constant shifts.
  const std::vector<double> base = problem.ansatz(1, 0, 1, 0);
  double lo = 1e300, hi = -1e300;
  for (int k = 0; k <= 200; ++k) {
    const double s = -1.0 + k * 0.01;
    std::vector<double> u = base;
    for (double& x : u) x += s;
    const double l = problem.function_loss(u);
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  CHECK(hi - lo < 1e-10);
  // Second differences annihilate affine profiles.
  std::vector<double> lin(100);
  for (int i = 0; i < 100; ++i) lin[i] = 3.0 - 2.0 * problem.x()[i];
  CHECK(problem.function_loss(lin) == doctest::Approx(problem.function_loss(std::vector<double>(100, 0.0))).epsilon(1e-9));
}

TEST_CASE("function-space slice contains the flat line") {
  const Poisson1D problem(100);
  const ValleyConfig cfg;
  const SlicePlane plane = function_space_plane(problem, cfg);
  const LossEval loss = [&](std::span<const double> u) { return problem.function_loss(u); };
  const SliceGrid g = evaluate_slice(plane, loss, 11, {-20, 20}, {-1, 1});
  // β = 0 column is the constant-shift line through the exact solution.
  const double l0 = problem.function_loss(problem.ansatz(1, 0, 1, 0));
  for (int i = 0; i < 11; ++i) CHECK(std::abs(g.loss(i, 5) - l0) < 1e-10);
  CHECK(g.loss(5, 0) > 1e3 * (l0 + 1e-12));
}

TEST_CASE("network losses on the 1D problem") {
  const Poisson1D problem(30);
  ValleyConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 5;
  const nn::MlpSpec spec = valley_network(cfg);
  Poisson1DNetwork net(problem, spec);
  auto theta = nn::init_params(spec, 3);
  std::vector<double> g(theta.size()), gf(theta.size());
  const double l = net.residual_gradient(theta, g);
  CHECK(l == doctest::Approx(net.residual_loss(theta)).epsilon(1e-14));
  const std::vector<double> target = problem.ansatz(1, 0, 1, 1);
  net.fit_gradient(theta, target, gf);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double keep = theta[j], h = 1e-6;
    theta[j] = keep + h;
    const double up = net.residual_loss(theta);
    theta[j] = keep - h;
    const double dn = net.residual_loss(theta);
    theta[j] = keep;
    CHECK(g[j] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("parameter-space valley on a small network") {
  const Poisson1D problem(40);
  ValleyConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 6;
  cfg.train_steps = 300;
  cfg.k_parameter = 5;
  const ValleyReport r = parameter_space_valley(problem, cfg);
  REQUIRE(r.hessians.size() == 3);
  CHECK(std::isnan(r.similarity[0]));
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(r.similarity[i] >= 0.0);
    CHECK(r.similarity[i] <= 1.0 + 1e-12);
  }
  for (const auto& h : r.hessians) CHECK(h.low_curvature.cols() == 5);
  // Deterministic.
  const ValleyReport again = parameter_space_valley(problem, cfg);
  CHECK(again.final_loss == r.final_loss);
}
