#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "caml/ad/dual_taylor.hpp"
#include "caml/ad/param_tape.hpp"
#include "caml/error.hpp"
#include "caml/nn/jet_batch.hpp"
#include "caml/nn/mlp.hpp"
#include "doctest.h"

using namespace caml;
using ad::DualTaylor;

namespace {

nn::ParamVector random_theta(const nn::MlpSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::ParamVector theta(spec.num_params());
  for (double& t : theta) t = u(rng);
  return theta;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_CASE("layout and parameter count") {
  const nn::MlpSpec spec{};
  CHECK(spec.num_params() == 2 * 64 + 64 + 3 * (64 * 64 + 64) + 64 + 1);
  const auto blocks = nn::layer_layout(spec);
  REQUIRE(blocks.size() == 5);
  CHECK(blocks[0].bias_offset == 128);
  CHECK(blocks[1].weight_offset == 192);
  CHECK_THROWS_AS((nn::MlpSpec{.hidden_layers = 0}.num_params()), ContractViolation);
}

TEST_CASE("Glorot init is deterministic with zero biases and bounded weights") {
  const nn::MlpSpec spec{};
  const auto a = nn::init_params(spec, 5);
  const auto b = nn::init_params(spec, 5);
  CHECK(a == b);
  CHECK(a != nn::init_params(spec, 6));
  const auto blocks = nn::layer_layout(spec);
  for (const auto& blk : blocks) {
    for (int o = 0; o < blk.fan_out; ++o) CHECK(a[blk.bias_offset + o] == 0.0);
  }
  const double bound = std::sqrt(6.0 / 66.0);
  CHECK(bound == doctest::Approx(0.3015).epsilon(1e-3));
  double max_abs = 0.0;
  for (int k = 0; k < 128; ++k) max_abs = std::max(max_abs, std::abs(a[k]));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.8 * bound);
}

TEST_CASE("forward on zero and hand-built networks") {
  const nn::MlpSpec spec{};
  const nn::ParamVector zero(spec.num_params(), 0.0);
  const auto x = ad::seed_inputs(std::vector<double>{0.3, 0.8});
  const auto out = nn::forward(zero, spec, x);
  CHECK(out[0].value() == 0.0);
  CHECK(out[0].grad(0) == 0.0);
  CHECK(out[0].hess(0, 1) == 0.0);
  CHECK(nn::forward_plain(zero, spec, std::vector<double>{0.3, 0.8})[0] == 0.0);

  // One hidden unit copying x through tanh, output weight 1.
  const nn::MlpSpec one{.input_dim = 1, .output_dim = 1, .hidden_layers = 1, .hidden_width = 1};
  const nn::ParamVector theta{1.0, 0.0, 1.0, 0.0};
  const DualTaylor xin = DualTaylor::variable(1, 0, 0.37);
  const DualTaylor got = nn::forward(theta, one, std::vector<DualTaylor>{xin})[0];
  const DualTaylor want = ad::tanh(xin);
  CHECK(got.value() == want.value());
  CHECK(got.grad(0) == want.grad(0));
  CHECK(got.hess(0, 0) == want.hess(0, 0));

  // u(x, y) = 2 tanh(x + y) + 0.5
  const nn::MlpSpec ramp{.input_dim = 2, .output_dim = 1, .hidden_layers = 1, .hidden_width = 1};
  const nn::ParamVector rt{1.0, 1.0, 0.0, 2.0, 0.5};
  CHECK(nn::forward_plain(rt, ramp, std::vector<double>{0.5, 0.5})[0] ==
        doctest::Approx(2.0 * std::tanh(1.0) + 0.5).epsilon(1e-15));
}

TEST_CASE("forward agrees with forward_plain and with finite differences") {
  const nn::MlpSpec spec{};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto theta = nn::init_params(spec, 100 + trial);
    const std::vector<double> x{u(rng), u(rng)};
    const auto jet = nn::forward(theta, spec, ad::seed_inputs(x))[0];
    CHECK(std::abs(jet.value() - nn::forward_plain(theta, spec, x)[0]) < 1e-14);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const auto theta = random_theta(spec, 500 + trial);
    const double x0 = u(rng), y0 = u(rng);
    const auto jet = nn::forward(theta, spec, ad::seed_inputs(std::vector<double>{x0, y0}))[0];
    auto f = [&](double x, double y) { return nn::forward_plain(theta, spec, std::vector<double>{x, y})[0]; };
    const double h1 = 1e-5, h2 = 1e-3;
    CHECK(close_rel(jet.grad(0), (f(x0 + h1, y0) - f(x0 - h1, y0)) / (2 * h1), 1e-5));
    CHECK(close_rel(jet.grad(1), (f(x0, y0 + h1) - f(x0, y0 - h1)) / (2 * h1), 1e-5));
    const double c = f(x0, y0);
    CHECK(close_rel(jet.hess(0, 0), (f(x0 + h2, y0) - 2 * c + f(x0 - h2, y0)) / (h2 * h2), 1e-3));
    CHECK(close_rel(jet.hess(1, 1), (f(x0, y0 + h2) - 2 * c + f(x0, y0 - h2)) / (h2 * h2), 1e-3));
    const double hxy = (f(x0 + h2, y0 + h2) - f(x0 + h2, y0 - h2) - f(x0 - h2, y0 + h2) +
                        f(x0 - h2, y0 - h2)) / (4 * h2 * h2);
    CHECK(close_rel(jet.hess(0, 1), hxy, 1e-3));
  }
}

TEST_CASE("batched jets reproduce per-point jets for every order") {
  const nn::MlpSpec spec{.input_dim = 2, .output_dim = 3, .hidden_layers = 3, .hidden_width = 16};
  const auto theta = random_theta(spec, 77);
  Eigen::MatrixXd pts = (Eigen::MatrixXd::Random(2, 13).array() + 1.0) * 0.5;
  for (auto order : {nn::JetOrder::kValue, nn::JetOrder::kGradient, nn::JetOrder::kLaplacian,
                     nn::JetOrder::kFull}) {
    nn::BatchedJet batch(spec, order, pts);
    batch.forward(theta);
    const auto& ch = batch.channels();
    for (int i = 0; i < 13; ++i) {
      const auto ref = nn::forward(theta, spec, ad::seed_inputs(std::vector<double>{pts(0, i), pts(1, i)}));
      for (int f = 0; f < 3; ++f) {
        CHECK(batch.output(f, 0)(i) == doctest::Approx(ref[f].value()).epsilon(1e-13));
        if (order == nn::JetOrder::kValue) continue;
        for (int k = 0; k < 2; ++k) {
          CHECK(batch.output(f, ch.grad(k))(i) == doctest::Approx(ref[f].grad(k)).epsilon(1e-12));
        }
        for (const auto& [a, b] : ch.hess_pairs) {
          CHECK(batch.output(f, ch.hess(a, b))(i) == doctest::Approx(ref[f].hess(a, b)).epsilon(1e-11));
        }
      }
    }
  }
  CHECK(nn::JetChannels(2, nn::JetOrder::kLaplacian).hess(0, 1) == -1);
}

TEST_CASE("batched backward matches the parameter tape") {
  const nn::MlpSpec spec{.input_dim = 2, .output_dim = 2, .hidden_layers = 2, .hidden_width = 8};
  const auto theta = random_theta(spec, 31);
  const int n = 5;
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(2, n);
  nn::BatchedJet batch(spec, nn::JetOrder::kFull, pts);
  batch.forward(theta);
  const int channels = batch.channels().count();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Random(2, channels * n);

  std::vector<double> grad(theta.size(), 0.0);
  batch.backward(theta, weights, grad);

  // Same scalar Σ w ∘ outputs built on the tape.
  const auto ref = ad::grad_wrt_params(
      [&](ad::ParamTape& tape, std::span<const ad::TVar> p) {
        ad::TVar total = tape.constant(0.0);
        for (int i = 0; i < n; ++i) {
          const auto out = nn::forward_tape(tape, p, spec, std::vector<double>{pts(0, i), pts(1, i)});
          for (int f = 0; f < 2; ++f) {
            auto w = [&](int c) { return weights(f, c * n + i); };
            total = total + tape.value_of(out[f]) * w(0) + tape.grad_of(out[f], 0) * w(1) +
                    tape.grad_of(out[f], 1) * w(2) + tape.hess_of(out[f], 0, 0) * w(3) +
                    tape.hess_of(out[f], 0, 1) * w(4) + tape.hess_of(out[f], 1, 1) * w(5);
          }
        }
        return total;
      },
      theta, 2);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    CHECK(grad[k] == doctest::Approx(ref[k]).epsilon(1e-11));
  }
}

TEST_CASE("checkpoint round trip") {
  const nn::MlpSpec spec{.input_dim = 2, .output_dim = 3, .hidden_layers = 2, .hidden_width = 5};
  const auto theta = random_theta(spec, 4);
  const auto path = std::filesystem::temp_directory_path() / "caml_ckpt_test.bin";
  nn::save_checkpoint(path, spec, theta);
  const auto ck = nn::load_checkpoint(path);
  CHECK(ck.spec.output_dim == 3);
  CHECK(ck.spec.hidden_width == 5);
  CHECK(std::memcmp(ck.theta.data(), theta.data(), theta.size() * sizeof(double)) == 0);
  std::filesystem::remove(path);
}
