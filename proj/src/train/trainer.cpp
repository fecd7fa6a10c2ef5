#include "caml/train/trainer.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "caml/diag/gradient_metrics.hpp"
#include "caml/error.hpp"
#include "caml/pde/benchmarks.hpp"
#include "caml/pde/collocation.hpp"
#include "caml/train/adam.hpp"
#include "caml/train/residual_engine.hpp"

namespace caml::train {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kVanilla: return "vanilla";
    case Mode::kAcOnly: return "ac_only";
    case Mode::kDrOnly: return "dr_only";
    case Mode::kCaml: return "caml";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::kVanilla, Mode::kAcOnly, Mode::kDrOnly, Mode::kCaml}) {
    if (to_string(m) == name) return m;
  }
  throw UsageError("unknown mode '" + name + "' (expected vanilla, ac_only, dr_only or caml)");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractViolation(std::string("TrainConfig: ") + what);
  };
  require(eta > 0.0, "eta must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
  require(eps_adam > 0.0, "Adam epsilon must be positive");
  require(w_res > 0.0 && w_bc > 0.0, "loss weights must be positive");
  require(t_min > 0 && t_min <= t_max, "need 0 < T_min <= T_max");
  require(l2_stop > 0.0, "L2_stop must be positive");
  require(schedule.t_d >= 0 && schedule.t_r >= 0, "t_d and t_r must be non-negative");
  require(k_init >= 1 && k_few >= 1 && t_c >= 1, "Newton counts and t_c must be at least 1");
  require(n_interior >= 1 && n_per_edge >= 1, "collocation counts must be at least 1");
  require(eval_grid >= 2 && eval_interval >= 1, "evaluation grid and interval out of range");
  if (network) network->validate();
}

TrainConfig default_config(const std::string& benchmark) {
  (void)pde::make_problem(benchmark);  // rejects unknown names
  TrainConfig c;
  if (benchmark == "heat") {
    c.w_bc = 5.0;
    c.l2_stop = 2e-3;
  } else if (benchmark == "poisson") {
    c.w_bc = 100.0;
    c.schedule = {200, 800};
  } else if (benchmark == "ns") {
    c.w_bc = 100.0;
    c.l2_stop = 5e-3;
  } else if (benchmark == "helmholtz") {
    c.w_bc = 10.0;
    c.t_min = 4000;
    c.l2_stop = 1e-3;
  } else if (benchmark == "two_phase_poisson") {
    c.t_max = 6000;
  }
  return c;
}

std::uint64_t collocation_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL; }

TrainResult train(const pde::Problem& problem, const TrainConfig& cfg, const EvalHook& hook) {
  cfg.validate();
  TrainResult result;
  result.spec = cfg.network.value_or(problem.default_network());
  result.theta = nn::init_params(result.spec, cfg.seed);
  std::vector<double>& theta = result.theta;
  RunLog& log = result.log;

  ResidualEngine engine(problem, result.spec,
                        pde::sample_collocation(problem, cfg.n_interior, cfg.n_per_edge,
                                                collocation_seed(cfg.seed)));
  L2Evaluator evaluate(problem, result.spec, cfg.eval_grid);
  AdamState adam(theta.size());
  const AdamConfig adam_cfg{cfg.eta, cfg.beta1, cfg.beta2, cfg.eps_adam};
  loss::OffsetState offset;
  offset.k_init = cfg.k_init;
  offset.k_few = cfg.k_few;
  offset.t_c = cfg.t_c;

  const std::size_t p = theta.size();
  std::vector<double> g_res(p), g_bc(p), g(p), prev(p);
  std::vector<double> cosines;
  double cum = 0.0;
  log.summary.rel_l2_at_t_min = kNaN;
  log.records.reserve(static_cast<std::size_t>(cfg.t_max));

  for (long t = 1; t <= cfg.t_max; ++t) {
    engine.forward(theta, t);
    const double lambda = uses_delay(cfg.mode) ? loss::delay_factor(t, cfg.schedule) : 1.0;
    const double gated = cfg.w_res * lambda;

    double c = 0.0;
    if (uses_offset(cfg.mode)) {
      if (!problem.nonlinear_offset()) {
        c = loss::closed_form_offset(engine.bundle(gated, cfg.w_bc));
      } else {
        if (const int k = offset.iterations_at(t); k > 0) {
          const loss::ResidualBundle b = engine.bundle(gated, cfg.w_bc);
          offset.c = loss::newton_offset([&](double x) { return loss::objective_derivs(b, x); },
                                         offset.c, k).c;
        }
        c = offset.c;
      }
    }

    const LossValues l = engine.gradients(theta, c, g_res, g_bc);
    for (std::size_t j = 0; j < p; ++j) {
      g[j] = gated * g_res[j] + cfg.w_bc * g_bc[j];
      if (!std::isfinite(g[j])) throw NumericalBlowup("non-finite parameter gradient", t, static_cast<long>(j));
    }

    StepRecord rec;
    rec.step = t;
    rec.loss_res = l.res;
    rec.loss_bc = l.bc;
    rec.loss_total = gated * l.res + cfg.w_bc * l.bc;
    rec.lambda = lambda;
    rec.c = c;
    rec.cos_phi = diag::grad_cosine(g_res, g_bc);
    rec.grad_norm_ratio = diag::grad_norm_ratio(g_res, g_bc);
    if (t <= cfg.t_min) cosines.push_back(rec.cos_phi);

    prev = theta;
    adam_step(theta, g, adam, adam_cfg);
    cum += diag::l2_distance(theta, prev);
    rec.cum_param_dist = cum;

    rec.rel_l2 = kNaN;
    const bool eval_now = t % cfg.eval_interval == 0 || t == cfg.t_min || t == cfg.t_max;
    if (eval_now) {
      rec.rel_l2 = evaluate(theta, c);
      if (!std::isfinite(rec.rel_l2)) throw NumericalBlowup("non-finite relative L2", t);
      log.summary.final_rel_l2 = rec.rel_l2;
      if (t == cfg.t_min) log.summary.rel_l2_at_t_min = rec.rel_l2;
      if (log.summary.stp < 0 && rec.rel_l2 < cfg.l2_stop) log.summary.stp = t;
    }
    log.records.push_back(rec);
    log.summary.steps_run = t;
    log.summary.final_c = c;
    if (eval_now && hook) hook(rec);
    if (eval_now && log.summary.stp >= 0 && t >= cfg.t_min) break;
  }

  log.summary.success = log.summary.stp >= 0;
  log.summary.pos_cos_fraction = diag::positive_cos_fraction(cosines);
  return result;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_run_log_csv(std::ostream& out, const RunLog& log) {
  out << "step,loss_res,loss_bc,loss_total,lambda,c,cos_phi,grad_norm_ratio,rel_l2,cum_param_dist\n";
  for (const StepRecord& r : log.records) {
    out << r.step << ',' << format_number(r.loss_res) << ',' << format_number(r.loss_bc) << ','
        << format_number(r.loss_total) << ',' << format_number(r.lambda) << ',' << format_number(r.c)
        << ',' << format_number(r.cos_phi) << ',' << format_number(r.grad_norm_ratio) << ','
        << format_number(r.rel_l2) << ',' << format_number(r.cum_param_dist) << '\n';
  }
}

}  // namespace caml::train
