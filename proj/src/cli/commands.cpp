#include "caml/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "caml/diag/landscape.hpp"
#include "caml/error.hpp"
#include "caml/nn/mlp.hpp"
#include "caml/pde/benchmarks.hpp"

namespace caml::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using train::format_number;

namespace {

const std::vector<std::string> kIntegerKeys{"t_min", "t_max",      "t_d",       "t_r",          "k_init",
                                            "k_few", "t_c",        "n_interior", "n_per_edge", "eval_grid",
                                            "eval_interval", "hidden_layers", "hidden_width"};

bool is_integer_key(const std::string& key) {
  return std::find(kIntegerKeys.begin(), kIntegerKeys.end(), key) != kIntegerKeys.end();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError(what + ": not a number: '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) throw UsageError(what + ": not a number: '" + text + "'");
  return v;
}

long as_integer(const std::string& key, double v) {
  if (v != std::floor(v) || std::abs(v) > 1e15) {
    throw UsageError("'" + key + "' must be an integer, got " + format_number(v));
  }
  return static_cast<long>(v);
}

std::string dashed(std::string key) {
  for (char& ch : key) {
    if (ch == '_') ch = '-';
  }
  return key;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json config_json(const train::TrainConfig& c, const nn::MlpSpec& spec) {
  json j;
  j["mode"] = train::to_string(c.mode);
  j["eta"] = c.eta;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps_adam"] = c.eps_adam;
  j["w_res"] = c.w_res;
  j["w_bc"] = c.w_bc;
  j["t_min"] = c.t_min;
  j["t_max"] = c.t_max;
  j["l2_stop"] = c.l2_stop;
  j["t_d"] = c.schedule.t_d;
  j["t_r"] = c.schedule.t_r;
  j["k_init"] = c.k_init;
  j["k_few"] = c.k_few;
  j["t_c"] = c.t_c;
  j["n_interior"] = c.n_interior;
  j["n_per_edge"] = c.n_per_edge;
  j["eval_grid"] = c.eval_grid;
  j["eval_interval"] = c.eval_interval;
  j["network"] = {{"input_dim", spec.input_dim},
                  {"output_dim", spec.output_dim},
                  {"hidden_layers", spec.hidden_layers},
                  {"hidden_width", spec.hidden_width},
                  {"activation", "tanh"}};
  return j;
}

/// Defaults for the benchmark with overrides and mode applied; config errors become usage errors.
train::TrainConfig resolve_config(const std::string& benchmark, train::Mode mode, const Overrides& ov,
                                  const pde::Problem& problem) {
  train::TrainConfig cfg = train::default_config(benchmark);
  cfg.mode = mode;
  cfg.network = problem.default_network();
  apply_overrides(cfg, ov);
  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

void write_manifest(const fs::path& path, const ExperimentManifest& m, const train::TrainConfig& cfg) {
  json j;
  j["created"] = timestamp();
  j["benchmark"] = m.benchmark;
  j["mode"] = train::to_string(m.mode);
  j["seeds"] = m.seeds;
  json ov = json::object();
  for (const auto& [k, v] : m.overrides.values) ov[k] = v;
  j["overrides"] = ov;
  j["resolved_config"] = config_json(cfg, *cfg.network);
  j["collocation_seeds"] = json::array();
  for (std::uint64_t s : m.seeds) j["collocation_seeds"].push_back(train::collocation_seed(s));
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

struct Stats {
  Aggregate stp;  // successful seeds only
  Aggregate l2_t_min;
  Aggregate pos_cos;
  Aggregate final_c;
  int successes = 0;
  int runs = 0;
};

Stats summarize(const std::vector<SeedOutcome>& outcomes) {
  std::vector<double> stp, l2, cosf, cval;
  Stats s;
  s.runs = static_cast<int>(outcomes.size());
  for (const SeedOutcome& o : outcomes) {
    if (!o.ok) continue;
    if (o.summary.success) {
      ++s.successes;
      stp.push_back(static_cast<double>(o.summary.stp));
    }
    l2.push_back(o.summary.rel_l2_at_t_min);
    cosf.push_back(o.summary.pos_cos_fraction);
    cval.push_back(o.summary.final_c);
  }
  s.stp = aggregate(stp);
  s.l2_t_min = aggregate(l2);
  s.pos_cos = aggregate(cosf);
  s.final_c = aggregate(cval);
  return s;
}

void write_summary_csv(const fs::path& path, const std::vector<SeedOutcome>& outcomes) {
  std::ofstream f = open_out(path);
  f << "seed,stp,l2_at_t_min,final_l2,pos_cos_fraction,final_c,steps_run,success,error\n";
  for (const SeedOutcome& o : outcomes) {
    f << o.seed << ',';
    if (o.ok) {
      const train::RunSummary& r = o.summary;
      f << (r.stp >= 0 ? std::to_string(r.stp) : std::string()) << ',' << format_number(r.rel_l2_at_t_min) << ','
        << format_number(r.final_rel_l2) << ',' << format_number(r.pos_cos_fraction) << ','
        << format_number(r.final_c) << ',' << r.steps_run << ',' << (r.success ? 1 : 0) << ",\n";
    } else {
      std::string msg = o.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      f << ",,,,,,0," << msg << '\n';
    }
  }
}

void write_aggregate_csv(const fs::path& path, const Stats& s) {
  std::ofstream f = open_out(path);
  f << "metric,mean,std,count\n";
  const auto row = [&](const char* name, const Aggregate& a) {
    f << name << ',' << format_number(a.mean) << ',' << format_number(a.std) << ',' << a.count << '\n';
  };
  row("stp", s.stp);
  row("l2_at_t_min", s.l2_t_min);
  row("pos_cos_fraction", s.pos_cos);
  row("final_c", s.final_c);
  f << "success_rate," << format_number(s.runs ? static_cast<double>(s.successes) / s.runs : 0.0) << ",," << s.runs
    << '\n';
}

const char* kStatsHeader =
    "successes,runs,stp_mean,stp_std,l2_at_t_min_mean,l2_at_t_min_std,pos_cos_fraction_mean,pos_cos_fraction_std";

std::string stats_columns(const Stats& s) {
  std::ostringstream os;
  os << s.successes << ',' << s.runs << ',' << format_number(s.stp.mean) << ',' << format_number(s.stp.std) << ','
     << format_number(s.l2_t_min.mean) << ',' << format_number(s.l2_t_min.std) << ','
     << format_number(s.pos_cos.mean) << ',' << format_number(s.pos_cos.std);
  return os.str();
}

bool any_completed(const std::vector<SeedOutcome>& outcomes) {
  for (const SeedOutcome& o : outcomes) {
    if (o.ok) return true;
  }
  return false;
}

// ---- option plumbing ----

struct CommonOptions {
  std::string benchmark;
  std::string mode = "caml";
  std::string seeds = "1";
  std::string out;
  std::string config_file;
  std::map<std::string, double> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
};

void add_override_flags(CLI::App& app, CommonOptions& o) {
  for (const std::string& key : override_keys()) {
    o.flag_values[key] = 0.0;
    o.flag_options[key] = app.add_option("--" + dashed(key), o.flag_values[key], "override " + key);
  }
  app.add_option("--config", o.config_file, "key=value config file; flags take precedence");
}

Overrides collect_overrides(const CommonOptions& o) {
  Overrides ov;
  if (!o.config_file.empty()) ov = load_config_file(o.config_file);
  Overrides flags;
  for (const auto& [key, opt] : o.flag_options) {
    if (opt->count() > 0) flags.values[key] = o.flag_values.at(key);
  }
  ov.merge(flags);
  return ov;
}

void check_benchmark(const std::string& name) {
  const auto& names = pde::benchmark_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw UsageError("unknown benchmark '" + name + "'");
  }
}

int report_run(const std::vector<SeedOutcome>& outcomes, const fs::path& out, std::ostream& os) {
  const Stats s = summarize(outcomes);
  os << "successes " << s.successes << "/" << s.runs;
  if (s.stp.count > 0) os << "  Stp " << format_number(s.stp.mean) << " ± " << format_number(s.stp.std);
  os << "  L2@T_min " << format_number(s.l2_t_min.mean) << "  pos_cos " << format_number(s.pos_cos.mean) << "\n"
     << "wrote " << out.string() << "\n";
  return any_completed(outcomes) ? 0 : 1;
}

// ---- diagnostics commands ----

struct ValleyOptions {
  std::string space = "function";
  std::string out;
  int resolution = 41;
  double pad = 0.25;
  int steps = 3000;
  std::uint64_t seed = 1;
  double h = 1e-3;
  int n = 100;
  int k = 0;  // 0: per-space default
};

void add_valley_flags(CLI::App& app, ValleyOptions& v) {
  app.add_option("--space", v.space, "function or parameter")->check(CLI::IsMember({"function", "parameter", "both"}));
  app.add_option("--steps", v.steps, "Adam steps per anchor network");
  app.add_option("--seed", v.seed, "initialisation seed shared by every anchor");
  app.add_option("--grid-points", v.n, "1D grid size");
}

diag::ValleyConfig valley_config(const ValleyOptions& v) {
  if (v.steps < 0) throw UsageError("--steps must be non-negative");
  if (v.n < 3) throw UsageError("--grid-points must be at least 3");
  diag::ValleyConfig c;
  c.train_steps = v.steps;
  c.seed = v.seed;
  c.h = v.h;
  return c;
}

void write_anchor_csv(const fs::path& path, const diag::SlicePlane& plane, const std::vector<Eigen::VectorXd>& anchors,
                      const std::vector<std::string>& labels) {
  std::ofstream f = open_out(path);
  f << "anchor,alpha,beta\n";
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto [a, b] = plane.coordinates(anchors[i]);
    f << labels[i] << ',' << format_number(a) << ',' << format_number(b) << '\n';
  }
}

int cmd_landscape(const ValleyOptions& v, std::ostream& os) {
  if (v.space == "both") throw UsageError("landscape takes --space function or --space parameter");
  if (v.resolution < 2) throw UsageError("--resolution must be at least 2");
  if (!(v.pad >= 0.0)) throw UsageError("--pad must be non-negative");
  const diag::ValleyConfig cfg = valley_config(v);
  const diag::Poisson1D problem(v.n);
  const fs::path out = v.out.empty() ? fs::path("runs/landscape_" + v.space) : fs::path(v.out);
  ensure_dir(out);

  diag::SlicePlane plane;
  diag::LossEval loss;
  std::vector<Eigen::VectorXd> anchors;
  std::vector<std::string> labels;
  std::optional<diag::Poisson1DNetwork> net;
  if (v.space == "function") {
    plane = diag::function_space_plane(problem, cfg);
    loss = [&](std::span<const double> u) { return problem.function_loss(u); };
    for (double b : cfg.shifts) {
      const std::vector<double> u = problem.ansatz(1.0, 0.0, 1.0, b);
      anchors.emplace_back(Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size())));
      labels.push_back("shift_" + format_number(b));
    }
    const std::vector<double> third = problem.ansatz(1.0, 0.0, 2.0, cfg.shifts[0]);
    anchors.emplace_back(Eigen::Map<const Eigen::VectorXd>(third.data(), static_cast<Eigen::Index>(third.size())));
    labels.push_back("amplitude_2");
  } else {
    const std::vector<nn::ParamVector> trained = diag::train_valley_anchors(problem, cfg);
    if (trained.size() < 3) throw UsageError("parameter landscape needs three shifts");
    for (std::size_t i = 0; i < trained.size(); ++i) {
      anchors.emplace_back(
          Eigen::Map<const Eigen::VectorXd>(trained[i].data(), static_cast<Eigen::Index>(trained[i].size())));
      labels.push_back("shift_" + format_number(cfg.shifts[i]));
    }
    plane = diag::build_slice_plane(anchors[0], anchors[1], anchors[2]);
    net.emplace(problem, diag::valley_network(cfg));
    loss = [&](std::span<const double> th) { return net->residual_loss(th); };
  }
  const auto [ra, rb] = diag::covering_ranges(plane, anchors, v.pad);
  const diag::SliceGrid grid = diag::evaluate_slice(plane, loss, v.resolution, ra, rb);
  {
    std::ofstream f = open_out(out / "slice.csv");
    diag::write_slice_csv(f, grid);
  }
  write_anchor_csv(out / "anchors.csv", plane, anchors, labels);
  os << "wrote " << (out / "slice.csv").string() << " (" << v.resolution << "x" << v.resolution << ")\n";
  return 0;
}

void export_valley(const fs::path& out, const std::string& space, const diag::ValleyReport& r, int k,
                   std::ofstream& table) {
  for (std::size_t i = 0; i < r.shifts.size(); ++i) {
    std::ofstream f = open_out(out / ("hessian_" + space + "_" + std::to_string(i) + ".csv"));
    diag::write_hessian_csv(f, r.hessians[i]);
    const Eigen::VectorXd mags = r.hessians[i].eigenvalues.cwiseAbs();
    table << space << ',' << format_number(r.shifts[i]) << ',' << k << ',' << format_number(r.final_loss[i]) << ','
          << format_number(r.hessians[i].kappa) << ',' << format_number(mags.minCoeff()) << ','
          << format_number(mags.maxCoeff()) << ',' << format_number(r.similarity[i]) << '\n';
  }
}

int cmd_hessian(const ValleyOptions& v, std::ostream& os) {
  if (!(v.h > 0.0)) throw UsageError("--fd-step must be positive");
  diag::ValleyConfig cfg = valley_config(v);
  const diag::Poisson1D problem(v.n);
  const bool fn = v.space == "function" || v.space == "both";
  const bool par = v.space == "parameter" || v.space == "both";
  // Dimension checks before any training so a bad k fails fast.
  const int fn_dim = problem.size();
  const int par_dim = diag::valley_network(cfg).num_params();
  if (v.k != 0) {
    if (v.k < 1) throw UsageError("--k must be positive");
    if (fn && v.k > fn_dim) {
      throw UsageError("--k " + std::to_string(v.k) + " exceeds the function-space dimension " + std::to_string(fn_dim));
    }
    if (par && v.k > par_dim) {
      throw UsageError("--k " + std::to_string(v.k) + " exceeds the parameter count " + std::to_string(par_dim));
    }
    cfg.k_function = v.k;
    cfg.k_parameter = v.k;
  }
  const fs::path out = v.out.empty() ? fs::path("runs/hessian_" + v.space) : fs::path(v.out);
  ensure_dir(out);
  std::ofstream table = open_out(out / "hessian_summary.csv");
  table << "space,shift,k,residual_loss,kappa,min_abs_eigenvalue,max_abs_eigenvalue,similarity\n";
  if (fn) {
    const diag::ValleyReport r = diag::function_space_valley(problem, cfg);
    export_valley(out, "function", r, cfg.k_function, table);
    os << "function space: kappa " << format_number(r.hessians[0].kappa);
    for (std::size_t i = 1; i < r.similarity.size(); ++i) os << "  Sim[" << i << "] " << format_number(r.similarity[i]);
    os << '\n';
  }
  if (par) {
    const diag::ValleyReport r = diag::parameter_space_valley(problem, cfg);
    export_valley(out, "parameter", r, cfg.k_parameter, table);
    os << "parameter space: kappa " << format_number(r.hessians[0].kappa);
    for (std::size_t i = 1; i < r.similarity.size(); ++i) os << "  Sim[" << i << "] " << format_number(r.similarity[i]);
    os << '\n';
  }
  os << "wrote " << (out / "hessian_summary.csv").string() << '\n';
  return 0;
}

}  // namespace

// ---- public API ----

void Overrides::merge(const Overrides& other) {
  for (const auto& [k, v] : other.values) values[k] = v;
}

const std::vector<std::string>& override_keys() {
  static const std::vector<std::string> keys{"eta",   "w_res", "w_bc",       "t_min",      "t_max",     "l2_stop",
                                             "t_d",   "t_r",   "k_init",     "k_few",      "t_c",       "n_interior",
                                             "n_per_edge", "eval_grid", "eval_interval", "hidden_layers", "hidden_width"};
  return keys;
}

Overrides parse_config(std::istream& in, const std::string& origin) {
  Overrides ov;
  const auto& keys = override_keys();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    for (char& ch : key) {
      if (ch == '-') ch = '_';
    }
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw UsageError(where + ": unknown key '" + key + "'");
    ov.values[key] = parse_double(trim(line.substr(eq + 1)), where);
  }
  return ov;
}

Overrides load_config_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path.string());
  return parse_config(f, path.string());
}

void apply_overrides(train::TrainConfig& c, const Overrides& ov) {
  for (const auto& [key, v] : ov.values) {
    if (is_integer_key(key)) as_integer(key, v);
  }
  const auto get = [&](const char* key, auto& field) {
    const auto it = ov.values.find(key);
    if (it == ov.values.end()) return;
    using F = std::remove_reference_t<decltype(field)>;
    if constexpr (std::is_floating_point_v<F>) {
      field = it->second;
    } else {
      field = static_cast<F>(as_integer(key, it->second));
    }
  };
  get("eta", c.eta);
  get("w_res", c.w_res);
  get("w_bc", c.w_bc);
  get("t_min", c.t_min);
  get("t_max", c.t_max);
  get("l2_stop", c.l2_stop);
  get("t_d", c.schedule.t_d);
  get("t_r", c.schedule.t_r);
  get("k_init", c.k_init);
  get("k_few", c.k_few);
  get("t_c", c.t_c);
  get("n_interior", c.n_interior);
  get("n_per_edge", c.n_per_edge);
  get("eval_grid", c.eval_grid);
  get("eval_interval", c.eval_interval);
  if (ov.values.count("hidden_layers") || ov.values.count("hidden_width")) {
    if (!c.network) throw UsageError("network overrides need a resolved base network");
    get("hidden_layers", c.network->hidden_layers);
    get("hidden_width", c.network->hidden_width);
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  const auto parse_one = [&](const std::string& s) -> std::uint64_t {
    const std::string t = trim(s);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("bad seed '" + s + "' in '" + text + "'");
    }
    return std::stoull(t);
  };
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    if (const auto dash = item.find('-'); dash != std::string::npos) {
      const std::uint64_t lo = parse_one(item.substr(0, dash));
      const std::uint64_t hi = parse_one(item.substr(dash + 1));
      if (hi < lo || hi - lo > 10000) throw UsageError("bad seed range '" + item + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_one(item));
    }
  }
  if (seeds.empty()) throw UsageError("seed list is empty");
  return seeds;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  double sum = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++a.count;
    }
  }
  if (a.count == 0) {
    a.mean = a.std = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  a.mean = sum / a.count;
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - a.mean) * (v - a.mean);
  }
  a.std = a.count > 1 ? std::sqrt(ss / (a.count - 1)) : 0.0;
  return a;
}

std::vector<SeedOutcome> run_experiment(const ExperimentManifest& m, std::ostream& progress) {
  check_benchmark(m.benchmark);
  if (m.seeds.empty()) throw UsageError("seed list is empty");
  const auto problem = pde::make_problem(m.benchmark);
  const train::TrainConfig base = resolve_config(m.benchmark, m.mode, m.overrides, *problem);
  ensure_dir(m.out);
  write_manifest(m.out / "manifest.json", m, base);

  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t seed : m.seeds) {
    SeedOutcome o;
    o.seed = seed;
    train::TrainConfig cfg = base;
    cfg.seed = seed;
    const std::string tag = m.benchmark + "/" + train::to_string(m.mode) + " seed " + std::to_string(seed);
    try {
      const train::EvalHook hook = [&](const train::StepRecord& r) {
        if (r.step % 1000 == 0) {
          progress << "  " << tag << " step " << r.step << " rel_l2 " << format_number(r.rel_l2) << '\n';
        }
      };
      const train::TrainResult res = train::train(*problem, cfg, hook);
      {
        std::ofstream f = open_out(m.out / ("seed_" + std::to_string(seed) + ".csv"));
        train::write_run_log_csv(f, res.log);
      }
      nn::save_checkpoint(m.out / ("seed_" + std::to_string(seed) + ".ckpt"), res.spec, res.theta);
      o.ok = true;
      o.summary = res.log.summary;
      progress << tag << ": Stp " << (o.summary.stp >= 0 ? std::to_string(o.summary.stp) : std::string("-"))
               << ", L2@T_min " << format_number(o.summary.rel_l2_at_t_min) << ", steps " << o.summary.steps_run
               << '\n';
    } catch (const Error& e) {
      o.error = e.what();
      progress << tag << ": failed: " << e.what() << '\n';
    }
    outcomes.push_back(std::move(o));
  }
  write_summary_csv(m.out / "summary.csv", outcomes);
  write_aggregate_csv(m.out / "aggregate.csv", summarize(outcomes));
  return outcomes;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CAML physics-informed network trainer and diagnostics", "caml"};
  app.require_subcommand(1);

  CommonOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "train one mode over a list of seeds");
  run->add_option("--benchmark", run_opt.benchmark, "benchmark name")->required();
  run->add_option("--mode", run_opt.mode, "vanilla, ac_only, dr_only or caml");
  run->add_option("--seeds", run_opt.seeds, "comma list or ranges, e.g. 1-5");
  run->add_option("--out", run_opt.out, "output directory");
  add_override_flags(*run, run_opt);

  CommonOptions abl_opt;
  CLI::App* ablate = app.add_subcommand("ablate", "run all four modes on shared seeds");
  ablate->add_option("--benchmark", abl_opt.benchmark, "benchmark name")->required();
  ablate->add_option("--seeds", abl_opt.seeds, "comma list or ranges");
  ablate->add_option("--out", abl_opt.out, "output directory");
  add_override_flags(*ablate, abl_opt);

  CommonOptions sw_opt;
  std::string sw_param;
  std::vector<std::string> sw_values;
  CLI::App* sweep = app.add_subcommand("sweep", "grid over one hyperparameter");
  sweep->add_option("--benchmark", sw_opt.benchmark, "benchmark name")->required();
  sweep->add_option("--mode", sw_opt.mode, "training mode");
  sweep->add_option("--seeds", sw_opt.seeds, "comma list or ranges");
  sweep->add_option("--out", sw_opt.out, "output directory");
  sweep->add_option("--param", sw_param, "override key, or 'schedule' for t_d/t_r pairs")->required();
  sweep->add_option("--values", sw_values, "values; schedule pairs are written t_d/t_r")->delimiter(',');
  add_override_flags(*sweep, sw_opt);

  ValleyOptions land_opt;
  CLI::App* landscape = app.add_subcommand("landscape", "1D Poisson loss-surface slice");
  add_valley_flags(*landscape, land_opt);
  landscape->add_option("--resolution", land_opt.resolution, "grid points per slice axis");
  landscape->add_option("--pad", land_opt.pad, "relative margin around the anchors");
  landscape->add_option("--out", land_opt.out, "output directory");

  ValleyOptions hes_opt;
  CLI::App* hessian = app.add_subcommand("hessian", "1D Poisson Hessian spectra and valley similarity");
  add_valley_flags(*hessian, hes_opt);
  hessian->add_option("--k", hes_opt.k, "low-curvature subspace size (default 1 function, 100 parameter)");
  hessian->add_option("--fd-step", hes_opt.h, "finite-difference step for the Hessian");
  hessian->add_option("--out", hes_opt.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "caml: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) {
      ExperimentManifest m;
      m.benchmark = run_opt.benchmark;
      check_benchmark(m.benchmark);
      m.mode = train::parse_mode(run_opt.mode);
      m.seeds = parse_seeds(run_opt.seeds);
      m.overrides = collect_overrides(run_opt);
      m.out = run_opt.out.empty() ? fs::path("runs/" + m.benchmark + "_" + run_opt.mode) : fs::path(run_opt.out);
      return report_run(run_experiment(m, err), m.out, out);
    }
    if (ablate->parsed()) {
      check_benchmark(abl_opt.benchmark);
      const std::vector<std::uint64_t> seeds = parse_seeds(abl_opt.seeds);
      const Overrides ov = collect_overrides(abl_opt);
      const fs::path root =
          abl_opt.out.empty() ? fs::path("runs/" + abl_opt.benchmark + "_ablation") : fs::path(abl_opt.out);
      ensure_dir(root);
      std::ofstream table = open_out(root / "ablation.csv");
      table << "mode," << kStatsHeader << '\n';
      bool completed = false;
      for (train::Mode mode : {train::Mode::kVanilla, train::Mode::kAcOnly, train::Mode::kDrOnly, train::Mode::kCaml}) {
        ExperimentManifest m{abl_opt.benchmark, mode, seeds, ov, root / train::to_string(mode)};
        const auto outcomes = run_experiment(m, err);
        completed = completed || any_completed(outcomes);
        const Stats s = summarize(outcomes);
        table << train::to_string(mode) << ',' << stats_columns(s) << '\n';
        table.flush();
        out << train::to_string(mode) << ": " << stats_columns(s) << '\n';
      }
      out << "wrote " << (root / "ablation.csv").string() << '\n';
      return completed ? 0 : 1;
    }
    if (sweep->parsed()) {
      check_benchmark(sw_opt.benchmark);
      const train::Mode mode = train::parse_mode(sw_opt.mode);
      const std::vector<std::uint64_t> seeds = parse_seeds(sw_opt.seeds);
      const Overrides base = collect_overrides(sw_opt);
      const auto& keys = override_keys();
      const bool schedule = sw_param == "schedule";
      std::string key = sw_param;
      for (char& ch : key) {
        if (ch == '-') ch = '_';
      }
      if (!schedule && std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw UsageError("unknown sweep parameter '" + sw_param + "'");
      }
      std::vector<std::string> values;
      for (const std::string& v : sw_values) {
        if (!trim(v).empty()) values.push_back(trim(v));
      }
      if (values.empty()) throw UsageError("sweep needs a non-empty --values list");
      // Parse every value before training anything.
      std::vector<Overrides> grid;
      for (const std::string& v : values) {
        Overrides ov = base;
        if (schedule) {
          const auto slash = v.find('/');
          if (slash == std::string::npos) throw UsageError("schedule values are written t_d/t_r, got '" + v + "'");
          ov.values["t_d"] = parse_double(v.substr(0, slash), "t_d");
          ov.values["t_r"] = parse_double(v.substr(slash + 1), "t_r");
        } else {
          ov.values[key] = parse_double(v, key);
        }
        train::TrainConfig probe = train::default_config(sw_opt.benchmark);
        probe.network = pde::make_problem(sw_opt.benchmark)->default_network();
        apply_overrides(probe, ov);
        grid.push_back(std::move(ov));
      }
      const fs::path root =
          sw_opt.out.empty() ? fs::path("runs/" + sw_opt.benchmark + "_sweep_" + key) : fs::path(sw_opt.out);
      ensure_dir(root);
      std::ofstream table = open_out(root / "sweep.csv");
      table << "param,value," << kStatsHeader << '\n';
      bool completed = false;
      for (std::size_t i = 0; i < values.size(); ++i) {
        std::string dir = key + "_" + values[i];
        for (char& ch : dir) {
          if (ch == '/') ch = '_';
        }
        ExperimentManifest m{sw_opt.benchmark, mode, seeds, grid[i], root / dir};
        const auto outcomes = run_experiment(m, err);
        completed = completed || any_completed(outcomes);
        const Stats s = summarize(outcomes);
        table << key << ',' << values[i] << ',' << stats_columns(s) << '\n';
        table.flush();
        out << key << "=" << values[i] << ": " << stats_columns(s) << '\n';
      }
      out << "wrote " << (root / "sweep.csv").string() << '\n';
      return completed ? 0 : 1;
    }
    if (landscape->parsed()) return cmd_landscape(land_opt, out);
    if (hessian->parsed()) return cmd_hessian(hes_opt, out);
  } catch (const UsageError& e) {
    err << "caml: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "caml: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace caml::cli
