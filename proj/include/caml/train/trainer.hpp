#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "caml/loss/caml_loss.hpp"
#include "caml/nn/mlp.hpp"
#include "caml/pde/problem.hpp"

namespace caml::train {

/// Which of the two mechanisms are active: the solved offset (AC) and the delayed residual (DR).
enum class Mode { kVanilla, kAcOnly, kDrOnly, kCaml };

std::string to_string(Mode mode);
/// Accepts vanilla, ac_only, dr_only, caml. Throws UsageError otherwise.
Mode parse_mode(const std::string& name);
inline bool uses_offset(Mode m) { return m == Mode::kAcOnly || m == Mode::kCaml; }
inline bool uses_delay(Mode m) { return m == Mode::kDrOnly || m == Mode::kCaml; }

struct TrainConfig {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  double w_res = 1.0;
  double w_bc = 1.0;
  long t_min = 6000;
  long t_max = 20000;
  double l2_stop = 1e-2;
  loss::DelaySchedule schedule{25, 50};
  int k_init = 10;
  int k_few = 2;
  long t_c = 1000;
  Mode mode = Mode::kCaml;
  std::uint64_t seed = 1;
  int n_interior = 8000;
  int n_per_edge = 600;
  int eval_grid = 101;
  int eval_interval = 25;
  /// Defaults to the problem's own network when empty.
  std::optional<nn::MlpSpec> network;

  /// Throws ContractViolation when any bound or count is out of range.
  void validate() const;
};

/// Per-benchmark defaults (learning rate, weights, iteration bounds, threshold, schedule).
TrainConfig default_config(const std::string& benchmark);

/// One logged step. Losses are taken at the pre-update θ; rel_l2 (NaN when not
/// evaluated at this step) and the distance are taken after the update.
struct StepRecord {
  long step = 0;
  double loss_res = 0.0;
  double loss_bc = 0.0;
  double loss_total = 0.0;
  double lambda = 0.0;
  double c = 0.0;
  double cos_phi = 0.0;
  double grad_norm_ratio = 0.0;
  double rel_l2 = 0.0;
  double cum_param_dist = 0.0;
};

struct RunSummary {
  long stp = -1;  // first evaluated step with rel_l2 < L2_stop; −1 if never
  bool success = false;
  long steps_run = 0;
  double rel_l2_at_t_min = 0.0;  // NaN if the run ended earlier (cannot happen without errors)
  double final_rel_l2 = 0.0;
  double pos_cos_fraction = 0.0;  // over steps 1..T_min
  double final_c = 0.0;
};

struct RunLog {
  std::vector<StepRecord> records;
  RunSummary summary;
};

struct TrainResult {
  RunLog log;
  nn::MlpSpec spec;
  nn::ParamVector theta;
};

/// Seed used for collocation sampling; shared by every mode for the same run seed.
std::uint64_t collocation_seed(std::uint64_t seed);

/// Optional hook called after every evaluated step (progress reporting).
using EvalHook = std::function<void(const StepRecord&)>;

TrainResult train(const pde::Problem& problem, const TrainConfig& config, const EvalHook& hook = {});

/// Header: step,loss_res,loss_bc,loss_total,lambda,c,cos_phi,grad_norm_ratio,rel_l2,cum_param_dist.
/// Undefined values (NaN) are written as empty fields.
void write_run_log_csv(std::ostream& out, const RunLog& log);

/// Shortest round-trippable decimal text for CSV payloads; NaN becomes "".
std::string format_number(double v);

}  // namespace caml::train
