#include "caml/train/residual_engine.hpp"

#include <array>
#include <cmath>

#include "caml/error.hpp"

namespace caml::train {

using pde::FieldJet;
using pde::JetTangent;
using pde::kJetSlots;

namespace {

/// Batched channel holding each jet slot (v, gx, gy, hxx, hxy, hyy), or −1.
std::array<int, kJetSlots> slot_channels(const nn::JetChannels& ch) {
  std::array<int, kJetSlots> s{0, -1, -1, -1, -1, -1};
  if (ch.order != nn::JetOrder::kValue) {
    s[1] = ch.grad(0);
    s[2] = ch.grad(1);
  }
  s[3] = ch.hess(0, 0);
  s[4] = ch.hess(0, 1);
  s[5] = ch.hess(1, 1);
  return s;
}

template <class T>
T& slot(FieldJet<T>& j, int s) {
  if (s == 0) return j.v;
  if (s <= 2) return j.g[s - 1];
  return j.h[s - 3];
}

template <class T>
const T& slot(const FieldJet<T>& j, int s) {
  return slot(const_cast<FieldJet<T>&>(j), s);
}

nn::JetOrder boundary_order(const pde::CollocationSet& colloc) {
  for (const auto& r : colloc.records) {
    if (r.beta != 0.0) return nn::JetOrder::kGradient;
  }
  return nn::JetOrder::kValue;
}

}  // namespace

ResidualEngine::ResidualEngine(const pde::Problem& problem, const nn::MlpSpec& spec,
                               pde::CollocationSet colloc)
    : problem_(problem),
      colloc_(std::move(colloc)),
      fields_(problem.num_fields()),
      interior_(spec, problem.interior_order(), colloc_.interior),
      boundary_(spec, boundary_order(colloc_), colloc_.boundary) {
  if (spec.input_dim != 2 || spec.output_dim != fields_) {
    throw ContractViolation("ResidualEngine: network shape does not match the problem");
  }
  if (static_cast<int>(colloc_.gamma.size()) != colloc_.num_interior()) {
    throw ContractViolation("ResidualEngine: gamma must have one entry per interior point");
  }
  offset_field_.assign(fields_, 0);
  for (int f : problem.offset_fields()) offset_field_.at(f) = 1;
}

void ResidualEngine::extract(const nn::BatchedJet& batch, std::vector<Jet>& jets) {
  const int n = batch.num_points();
  const auto channels = slot_channels(batch.channels());
  jets.assign(static_cast<std::size_t>(n) * fields_, Jet{});
  const Eigen::MatrixXd& out = batch.output_matrix();
  for (int f = 0; f < fields_; ++f) {
    for (int s = 0; s < kJetSlots; ++s) {
      if (channels[s] < 0) continue;
      const Eigen::Index base = static_cast<Eigen::Index>(channels[s]) * n;
      for (int i = 0; i < n; ++i) {
        const double v = out(f, base + i);
        if (!std::isfinite(v)) throw NumericalBlowup("non-finite network output", step_, i);
        slot(jets[static_cast<std::size_t>(i) * fields_ + f], s) = v;
      }
    }
  }
}

void ResidualEngine::forward(std::span<const double> theta, long step) {
  step_ = step;
  interior_.forward(theta);
  boundary_.forward(theta);
  extract(interior_, interior_jets_);
  extract(boundary_, boundary_jets_);
}

double ResidualEngine::alpha_eff(const pde::BoundaryRecord& rec) const {
  return offset_field_[rec.field] ? rec.alpha : 0.0;
}

double ResidualEngine::boundary_residual(const pde::BoundaryRecord& rec, double c) const {
  const Jet& j = boundary_jets_[static_cast<std::size_t>(rec.point) * fields_ + rec.field];
  double s = rec.alpha * j.v + alpha_eff(rec) * c - rec.g;
  if (rec.beta != 0.0) s += rec.beta * (j.g[0] * rec.nx + j.g[1] * rec.ny);
  return s;
}

loss::ResidualBundle ResidualEngine::bundle(double res_weight, double bc_weight) const {
  loss::ResidualBundle b;
  const int n = colloc_.num_interior();
  const int nr = problem_.num_residuals();
  const bool with_interior = res_weight > 0.0;
  const bool nonlinear = problem_.nonlinear_offset();
  b.w_res = with_interior ? res_weight : 1.0;
  b.w_bc = bc_weight;

  if (with_interior) {
    std::vector<double> r(nr);
    b.r.reserve(static_cast<std::size_t>(n) * nr);
    for (int i = 0; i < n; ++i) {
      const std::span<const Jet> u(&interior_jets_[static_cast<std::size_t>(i) * fields_], fields_);
      problem_.residual(u, colloc_.interior_point(i), 0.0, r);
      for (int k = 0; k < nr; ++k) {
        if (!std::isfinite(r[k])) throw NumericalBlowup("non-finite interior residual", step_, i);
        b.r.push_back(r[k]);
        b.gamma.push_back(nonlinear ? 0.0 : colloc_.gamma[i]);
      }
    }
  }
  b.s.reserve(colloc_.records.size());
  for (std::size_t k = 0; k < colloc_.records.size(); ++k) {
    const double s = boundary_residual(colloc_.records[k], 0.0);
    if (!std::isfinite(s)) throw NumericalBlowup("non-finite boundary residual", step_, static_cast<long>(k));
    b.s.push_back(s);
    b.alpha.push_back(alpha_eff(colloc_.records[k]));
  }

  if (nonlinear) {
    const std::vector<double> s0 = b.s, a0 = b.alpha;
    b.objective_of_c = [this, with_interior, res_weight, bc_weight, s0, a0](ad::Dual2 c) {
      ad::Dual2 j = 0.0;
      if (with_interior) {
        const int n_int = colloc_.num_interior();
        const int n_res = problem_.num_residuals();
        std::vector<FieldJet<ad::Dual2>> u(fields_);
        std::vector<ad::Dual2> r(n_res);
        ad::Dual2 acc = 0.0;
        for (int i = 0; i < n_int; ++i) {
          for (int f = 0; f < fields_; ++f) {
            const Jet& src = interior_jets_[static_cast<std::size_t>(i) * fields_ + f];
            for (int s = 0; s < kJetSlots; ++s) slot(u[f], s) = slot(src, s);
          }
          problem_.residual(u, colloc_.interior_point(i), c, r);
          for (const ad::Dual2& e : r) acc += e * e;
        }
        j += acc * (res_weight / (static_cast<double>(n_int) * n_res));
      }
      if (!s0.empty()) {
        ad::Dual2 acc = 0.0;
        for (std::size_t k = 0; k < s0.size(); ++k) {
          const ad::Dual2 e = c * a0[k] + s0[k];
          acc += e * e;
        }
        j += acc * (bc_weight / static_cast<double>(s0.size()));
      }
      return j;
    };
  }
  return b;
}

LossValues ResidualEngine::losses(double c) const {
  LossValues out;
  const int n = colloc_.num_interior();
  const int nr = problem_.num_residuals();
  std::vector<double> r(nr);
  for (int i = 0; i < n; ++i) {
    const std::span<const Jet> u(&interior_jets_[static_cast<std::size_t>(i) * fields_], fields_);
    problem_.residual(u, colloc_.interior_point(i), c, r);
    for (double e : r) out.res += e * e;
  }
  out.res /= static_cast<double>(n) * nr;
  for (const auto& rec : colloc_.records) out.bc += std::pow(boundary_residual(rec, c), 2);
  if (!colloc_.records.empty()) out.bc /= static_cast<double>(colloc_.records.size());
  return out;
}

LossValues ResidualEngine::gradients(std::span<const double> theta, double c, std::span<double> g_res,
                                     std::span<double> g_bc) {
  LossValues out;
  const int n = colloc_.num_interior();
  const int nr = problem_.num_residuals();
  const auto channels = slot_channels(interior_.channels());

  // Interior adjoints: ∂L_res/∂(jet slot) via the residual's Jacobian in the jet.
  interior_bar_.setZero(fields_, static_cast<Eigen::Index>(interior_.channels().count()) * n);
  const double scale = 2.0 / (static_cast<double>(n) * nr);
  std::vector<FieldJet<JetTangent>> u(fields_);
  std::vector<JetTangent> r(nr);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < fields_; ++f) {
      const Jet& src = interior_jets_[static_cast<std::size_t>(i) * fields_ + f];
      for (int s = 0; s < kJetSlots; ++s) {
        slot(u[f], s) = channels[s] >= 0 ? JetTangent::variable(slot(src, s), f * kJetSlots + s)
                                         : JetTangent(0.0);
      }
    }
    problem_.residual(u, colloc_.interior_point(i), JetTangent(c), r);
    for (const JetTangent& e : r) {
      if (!std::isfinite(e.v)) throw NumericalBlowup("non-finite interior residual", step_, i);
      out.res += e.v * e.v;
      const double w = scale * e.v;
      for (int f = 0; f < fields_; ++f) {
        for (int s = 0; s < kJetSlots; ++s) {
          if (channels[s] < 0) continue;
          interior_bar_(f, static_cast<Eigen::Index>(channels[s]) * n + i) += w * e.d[f * kJetSlots + s];
        }
      }
    }
  }
  out.res /= static_cast<double>(n) * nr;

  const Eigen::Index m = boundary_.num_points();
  boundary_bar_.setZero(fields_, static_cast<Eigen::Index>(boundary_.channels().count()) * m);
  const double n_rec = static_cast<double>(colloc_.records.size());
  for (std::size_t k = 0; k < colloc_.records.size(); ++k) {
    const auto& rec = colloc_.records[k];
    const double s = boundary_residual(rec, c);
    if (!std::isfinite(s)) throw NumericalBlowup("non-finite boundary residual", step_, static_cast<long>(k));
    out.bc += s * s;
    const double w = 2.0 * s / n_rec;
    boundary_bar_(rec.field, rec.point) += w * rec.alpha;
    if (rec.beta != 0.0) {
      boundary_bar_(rec.field, boundary_.channels().grad(0) * m + rec.point) += w * rec.beta * rec.nx;
      boundary_bar_(rec.field, boundary_.channels().grad(1) * m + rec.point) += w * rec.beta * rec.ny;
    }
  }
  if (n_rec > 0) out.bc /= n_rec;

  std::fill(g_res.begin(), g_res.end(), 0.0);
  std::fill(g_bc.begin(), g_bc.end(), 0.0);
  interior_.backward(theta, interior_bar_, g_res);
  boundary_.backward(theta, boundary_bar_, g_bc);
  return out;
}

loss::ResidualBundle assemble_residuals(const pde::Problem& problem, std::span<const double> theta,
                                        const nn::MlpSpec& spec, const pde::CollocationSet& colloc,
                                        double w_res, double w_bc) {
  ResidualEngine engine(problem, spec, colloc);
  engine.forward(theta);
  loss::ResidualBundle b = engine.bundle(w_res, w_bc);
  b.objective_of_c = nullptr;  // would dangle once the engine goes out of scope
  return b;
}

L2Evaluator::L2Evaluator(const pde::Problem& problem, const nn::MlpSpec& spec, int grid_points_per_axis)
    : problem_(problem),
      batch_(spec, nn::JetOrder::kValue, pde::evaluation_grid(problem, grid_points_per_axis)),
      fields_(problem.error_fields()) {
  const Eigen::MatrixXd& pts = batch_.points();
  exact_.resize(static_cast<Eigen::Index>(fields_.size()), pts.cols());
  for (std::size_t f = 0; f < fields_.size(); ++f) {
    shifted_.push_back(problem.offset_applies(fields_[f]) ? 1 : 0);
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      exact_(static_cast<Eigen::Index>(f), i) = problem.exact(fields_[f], {pts(0, i), pts(1, i)});
    }
  }
  exact_norm_ = exact_.norm();
}

double L2Evaluator::operator()(std::span<const double> theta, double c) {
  if (exact_norm_ == 0.0) throw UndefinedMetric("relative L2: exact solution has zero norm");
  batch_.forward(theta);
  double err = 0.0;
  for (std::size_t f = 0; f < fields_.size(); ++f) {
    const auto u = batch_.output(fields_[f], 0);
    const double shift = shifted_[f] ? c : 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double d = u(i) + shift - exact_(static_cast<Eigen::Index>(f), i);
      err += d * d;
    }
  }
  return std::sqrt(err) / exact_norm_;
}

double relative_l2(std::span<const double> theta, double c, const pde::Problem& problem,
                   const nn::MlpSpec& spec, int grid_points_per_axis) {
  L2Evaluator eval(problem, spec, grid_points_per_axis);
  return eval(theta, c);
}

}  // namespace caml::train
