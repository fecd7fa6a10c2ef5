#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "caml/train/trainer.hpp"

namespace caml::cli {

/// Optional hyperparameter overrides; unset fields keep the benchmark defaults.
struct Overrides {
  std::map<std::string, double> values;  // key → value, keys as listed by override_keys()

  /// Later sources win.
  void merge(const Overrides& other);
};

/// Keys accepted in config files and on the command line (as --key-with-dashes).
const std::vector<std::string>& override_keys();

/// `key = value` lines; blank lines and `#` comments ignored. Throws UsageError
/// on unknown keys or malformed numbers.
Overrides parse_config(std::istream& in, const std::string& origin);
Overrides load_config_file(const std::filesystem::path& path);

/// Applies overrides to a config. Throws UsageError for non-integral values on integer keys.
void apply_overrides(train::TrainConfig& config, const Overrides& overrides);

/// "1,2,5" or ranges such as "1-5". Throws UsageError when empty or malformed.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

struct ExperimentManifest {
  std::string benchmark;
  train::Mode mode = train::Mode::kCaml;
  std::vector<std::uint64_t> seeds{1};
  Overrides overrides;
  std::filesystem::path out;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;  // false when training threw
  std::string error;
  train::RunSummary summary;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  int count = 0;
};

/// Mean and sample std of the finite values; count 0 (and NaNs) when none.
Aggregate aggregate(const std::vector<double>& values);

/// Trains every seed and writes manifest.json, seed_<s>.csv, summary.csv and
/// aggregate.csv under manifest.out. Per-seed failures are recorded, not fatal.
std::vector<SeedOutcome> run_experiment(const ExperimentManifest& manifest, std::ostream& progress);

/// Full command-line entry point. Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace caml::cli
