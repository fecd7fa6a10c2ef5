#include "caml/diag/landscape.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "caml/error.hpp"
#include "caml/train/adam.hpp"

namespace caml::diag {

namespace {

Eigen::MatrixXd grid_points(const Poisson1D& p) {
  Eigen::MatrixXd pts(1, p.size());
  for (int i = 0; i < p.size(); ++i) pts(0, i) = p.x()[i];
  return pts;
}

Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Poisson1D::Poisson1D(int n) {
  if (n < 3) throw ContractViolation("Poisson1D: need at least 3 grid points");
  spacing_ = std::numbers::pi / (n - 1);
  for (int i = 0; i < n; ++i) x_.push_back(i * spacing_);
}

double Poisson1D::function_loss(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != size()) throw ContractViolation("Poisson1D: grid size mismatch");
  const double inv_h2 = 1.0 / (spacing_ * spacing_);
  double acc = 0.0;
  for (int i = 1; i + 1 < size(); ++i) {
    const double r = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2 + std::sin(x_[i]);
    acc += r * r;
  }
  return acc / (size() - 2);
}

std::vector<double> Poisson1D::ansatz(double omega, double phi, double amplitude, double shift) const {
  std::vector<double> u;
  u.reserve(x_.size());
  for (double x : x_) u.push_back(amplitude * std::sin(omega * x + phi) + shift);
  return u;
}

Poisson1DNetwork::Poisson1DNetwork(const Poisson1D& problem, const nn::MlpSpec& spec)
    : spec_(spec), batch_(spec, nn::JetOrder::kFull, grid_points(problem)) {
  if (spec.input_dim != 1 || spec.output_dim != 1) {
    throw ContractViolation("Poisson1DNetwork: network must map R -> R");
  }
  sin_x_.resize(problem.size());
  for (int i = 0; i < problem.size(); ++i) sin_x_(i) = std::sin(problem.x()[i]);
}

double Poisson1DNetwork::residual_loss(std::span<const double> theta) {
  batch_.forward(theta);
  const int n = batch_.num_points();
  const Eigen::VectorXd r = batch_.output(0, batch_.channels().hess(0, 0)).transpose() + sin_x_;
  return r.squaredNorm() / n;
}

double Poisson1DNetwork::residual_gradient(std::span<const double> theta, std::span<double> grad) {
  batch_.forward(theta);
  const int n = batch_.num_points();
  const int ch = batch_.channels().hess(0, 0);
  const Eigen::VectorXd r = batch_.output(0, ch).transpose() + sin_x_;
  bar_.setZero(1, static_cast<Eigen::Index>(batch_.channels().count()) * n);
  bar_.row(0).segment(static_cast<Eigen::Index>(ch) * n, n) = (2.0 / n) * r.transpose();
  std::fill(grad.begin(), grad.end(), 0.0);
  batch_.backward(theta, bar_, grad);
  return r.squaredNorm() / n;
}

double Poisson1DNetwork::fit_gradient(std::span<const double> theta, std::span<const double> target,
                                      std::span<double> grad) {
  batch_.forward(theta);
  const int n = batch_.num_points();
  if (static_cast<int>(target.size()) != n) throw ContractViolation("fit_gradient: target size mismatch");
  const int ch = batch_.channels().hess(0, 0);
  const Eigen::VectorXd r = batch_.output(0, ch).transpose() + sin_x_;
  const Eigen::VectorXd d = batch_.output(0, 0).transpose() - to_vector(target);
  bar_.setZero(1, static_cast<Eigen::Index>(batch_.channels().count()) * n);
  bar_.row(0).segment(static_cast<Eigen::Index>(ch) * n, n) = (2.0 / n) * r.transpose();
  bar_.row(0).segment(0, n) = (2.0 / n) * d.transpose();
  std::fill(grad.begin(), grad.end(), 0.0);
  batch_.backward(theta, bar_, grad);
  return (r.squaredNorm() + d.squaredNorm()) / n;
}

nn::MlpSpec valley_network(const ValleyConfig& config) {
  nn::MlpSpec s;
  s.input_dim = 1;
  s.output_dim = 1;
  s.hidden_layers = config.hidden_layers;
  s.hidden_width = config.hidden_width;
  return s;
}

namespace {

void check_config(const ValleyConfig& c) {
  if (c.shifts.size() < 2) throw ContractViolation("valley analysis needs at least two shifts");
  if (!(c.h > 0.0)) throw ContractViolation("valley analysis: h must be positive");
}

void fill_similarity(ValleyReport& r) {
  r.similarity.assign(r.hessians.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i < r.hessians.size(); ++i) {
    r.similarity[i] = subspace_similarity(r.hessians[0].low_curvature, r.hessians[i].low_curvature);
  }
}

}  // namespace

ValleyReport function_space_valley(const Poisson1D& problem, const ValleyConfig& config) {
  check_config(config);
  ValleyReport r;
  r.shifts = config.shifts;
  const LossEval loss = [&](std::span<const double> u) { return problem.function_loss(u); };
  for (double b : config.shifts) {
    const std::vector<double> u = problem.ansatz(1.0, 0.0, 1.0, b);
    r.anchors.push_back(to_vector(u));
    r.final_loss.push_back(problem.function_loss(u));
    r.hessians.push_back(fd_hessian(loss, u, config.h, config.k_function));
  }
  fill_similarity(r);
  return r;
}

std::vector<nn::ParamVector> train_valley_anchors(const Poisson1D& problem, const ValleyConfig& config) {
  check_config(config);
  const nn::MlpSpec spec = valley_network(config);
  Poisson1DNetwork net(problem, spec);
  std::vector<double> grad(spec.num_params());
  std::vector<nn::ParamVector> anchors;
  for (double b : config.shifts) {
    const std::vector<double> target = problem.ansatz(1.0, 0.0, 1.0, b);
    nn::ParamVector theta = nn::init_params(spec, config.seed);
    train::AdamState adam(theta.size());
    const train::AdamConfig adam_cfg{config.eta};
    for (int t = 0; t < config.train_steps; ++t) {
      const double l = net.fit_gradient(theta, target, grad);
      if (!std::isfinite(l)) throw NumericalBlowup("valley training diverged", t + 1);
      train::adam_step(theta, grad, adam, adam_cfg);
    }
    anchors.push_back(std::move(theta));
  }
  return anchors;
}

ValleyReport parameter_space_valley(const Poisson1D& problem, const ValleyConfig& config) {
  const std::vector<nn::ParamVector> trained = train_valley_anchors(problem, config);
  Poisson1DNetwork net(problem, valley_network(config));
  ValleyReport r;
  r.shifts = config.shifts;
  const GradEval g = [&](std::span<const double> th, std::span<double> out) { net.residual_gradient(th, out); };
  for (const nn::ParamVector& theta : trained) {
    r.anchors.push_back(to_vector(theta));
    r.final_loss.push_back(net.residual_loss(theta));
    r.hessians.push_back(analyze_hessian(fd_hessian_from_gradient(g, theta, config.h), config.k_parameter));
  }
  fill_similarity(r);
  return r;
}

SlicePlane function_space_plane(const Poisson1D& problem, const ValleyConfig& config) {
  check_config(config);
  const std::vector<double> u0 = problem.ansatz(1.0, 0.0, 1.0, config.shifts[0]);
  const std::vector<double> u1 = problem.ansatz(1.0, 0.0, 1.0, config.shifts[1]);
  const std::vector<double> u2 = problem.ansatz(1.0, 0.0, 2.0, config.shifts[0]);
  return build_slice_plane(to_vector(u0), to_vector(u1), to_vector(u2));
}

}  // namespace caml::diag
