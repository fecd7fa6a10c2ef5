#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "caml/cli/commands.hpp"
#include "caml/error.hpp"

namespace fs = std::filesystem;
using namespace caml;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "caml");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("caml_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// A run short enough for a unit test.
const std::vector<std::string> kTiny{"--t-min", "30", "--t-max", "50", "--n-interior", "120", "--n-per-edge", "20",
                                     "--eval-grid", "21"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

}  // namespace

TEST_CASE("seed lists accept commas and ranges") {
  CHECK(cli::parse_seeds("1,2,3,4,5") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(cli::parse_seeds("1-3,7") == std::vector<std::uint64_t>{1, 2, 3, 7});
  CHECK(cli::parse_seeds(" 4 ") == std::vector<std::uint64_t>{4});
  CHECK_THROWS_AS(cli::parse_seeds(""), UsageError);
  CHECK_THROWS_AS(cli::parse_seeds("a,b"), UsageError);
  CHECK_THROWS_AS(cli::parse_seeds("5-2"), UsageError);
}

TEST_CASE("config files parse key=value with comments") {
  std::istringstream in("# header\n eta = 5e-4 \n\nw-bc=10  # dashes allowed\nt_max = 300\n");
  const cli::Overrides ov = cli::parse_config(in, "mem");
  CHECK(ov.values.at("eta") == doctest::Approx(5e-4));
  CHECK(ov.values.at("w_bc") == 10.0);
  CHECK(ov.values.at("t_max") == 300.0);

  std::istringstream unknown("learning_rate = 1\n");
  CHECK_THROWS_AS(cli::parse_config(unknown, "mem"), UsageError);
  std::istringstream bad("eta = fast\n");
  CHECK_THROWS_AS(cli::parse_config(bad, "mem"), UsageError);
  std::istringstream nokey("eta 1\n");
  CHECK_THROWS_AS(cli::parse_config(nokey, "mem"), UsageError);
}

TEST_CASE("overrides win over defaults and later sources win") {
  train::TrainConfig c = train::default_config("heat");
  c.network = nn::MlpSpec{};
  cli::Overrides file;
  file.values = {{"eta", 1e-4}, {"t_d", 40}, {"t_r", 160}};
  cli::Overrides flags;
  flags.values = {{"eta", 2e-4}, {"hidden_width", 16}};
  file.merge(flags);
  cli::apply_overrides(c, file);
  CHECK(c.eta == doctest::Approx(2e-4));
  CHECK(c.schedule.t_d == 40);
  CHECK(c.schedule.t_r == 160);
  CHECK(c.network->hidden_width == 16);
  CHECK(c.w_bc == 5.0);  // untouched default

  cli::Overrides frac;
  frac.values = {{"t_max", 10.5}};
  CHECK_THROWS_AS(cli::apply_overrides(c, frac), UsageError);
}

TEST_CASE("aggregate uses the sample standard deviation of finite values") {
  const cli::Aggregate a = cli::aggregate({1.0, 2.0, 3.0, 4.0, std::nan("")});
  CHECK(a.count == 4);
  CHECK(a.mean == doctest::Approx(2.5));
  CHECK(a.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const cli::Aggregate one = cli::aggregate({7.0});
  CHECK(one.std == 0.0);
  CHECK(std::isnan(cli::aggregate({}).mean));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"run", "--benchmark", "wave"}).code == 2);
  CHECK(invoke({"run", "--benchmark", "heat", "--mode", "fancy"}).code == 2);
  CHECK(invoke({"run", "--benchmark", "heat", "--seeds", ""}).code == 2);
  CHECK(invoke({"run", "--benchmark", "heat", "--t-min", "500", "--t-max", "100"}).code == 2);
  CHECK(invoke({"run", "--benchmark", "heat", "--config", "/nonexistent/caml.cfg"}).code == 2);
  CHECK(invoke({"sweep", "--benchmark", "poisson", "--param", "schedule"}).code == 2);
  CHECK(invoke({"sweep", "--benchmark", "poisson", "--param", "schedule", "--values", "10"}).code == 2);
  CHECK(invoke({"sweep", "--benchmark", "poisson", "--param", "momentum", "--values", "1"}).code == 2);
  CHECK(invoke({"hessian", "--space", "function", "--k", "101", "--out", scratch("bad_k").string()}).code == 2);
  CHECK(invoke({"hessian", "--space", "parameter", "--k", "5000", "--out", scratch("bad_k2").string()}).code == 2);
  CHECK(invoke({"landscape", "--space", "sideways"}).code == 2);
}

TEST_CASE("run writes logs, summary and manifest, reproducibly") {
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  const CliResult ra = invoke(with_tiny({"run", "--benchmark", "heat", "--seeds", "1,2", "--out", a.string()}));
  REQUIRE(ra.code == 0);
  REQUIRE(invoke(with_tiny({"run", "--benchmark", "heat", "--seeds", "1,2", "--out", b.string()})).code == 0);

  for (const char* f : {"seed_1.csv", "seed_2.csv", "summary.csv", "aggregate.csv", "seed_1.ckpt", "seed_2.ckpt"}) {
    CAPTURE(std::string(f));
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["benchmark"] == "heat");
  CHECK(manifest["resolved_config"]["w_bc"] == 5.0);  // benchmark default survives
  CHECK(manifest["resolved_config"]["t_max"] == 50);

  // The summary agrees with the per-seed logs.
  const auto summary = read_csv(a / "summary.csv");
  REQUIRE(summary.size() == 3);
  CHECK(summary[0][0] == "seed");
  std::vector<double> l2;
  for (int s = 1; s <= 2; ++s) {
    const auto log = read_csv(a / ("seed_" + std::to_string(s) + ".csv"));
    REQUIRE(log.size() == 51);
    // rel_l2 column at step T_min = 30 is evaluated.
    const auto& row = log[30];
    CHECK(row[0] == "30");
    CHECK(summary[s][2] == row[8]);
    CHECK(summary[s][6] == "50");
    l2.push_back(std::stod(row[8]));
  }
  const auto agg = read_csv(a / "aggregate.csv");
  CHECK(agg[2][0] == "l2_at_t_min");
  CHECK(std::stod(agg[2][1]) == doctest::Approx((l2[0] + l2[1]) / 2).epsilon(1e-14));
  CHECK(std::stod(agg[2][2]) == doctest::Approx(std::abs(l2[0] - l2[1]) / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("ablate emits four mode rows on shared collocation") {
  const fs::path root = scratch("ablate");
  const CliResult r = invoke(with_tiny({"ablate", "--benchmark", "heat", "--seeds", "3", "--out", root.string()}));
  REQUIRE(r.code == 0);
  const auto table = read_csv(root / "ablation.csv");
  REQUIRE(table.size() == 5);
  CHECK(table[1][0] == "vanilla");
  CHECK(table[2][0] == "ac_only");
  CHECK(table[3][0] == "dr_only");
  CHECK(table[4][0] == "caml");

  const auto m_van = nlohmann::json::parse(slurp(root / "vanilla" / "manifest.json"));
  const auto m_caml = nlohmann::json::parse(slurp(root / "caml" / "manifest.json"));
  CHECK(m_van["collocation_seeds"] == m_caml["collocation_seeds"]);
  // Same init and points: neither vanilla nor dr_only shifts the target, so step-1 losses coincide.
  const auto van = read_csv(root / "vanilla" / "seed_3.csv");
  const auto dr = read_csv(root / "dr_only" / "seed_3.csv");
  CHECK(van[1][1] == dr[1][1]);
  CHECK(van[1][2] == dr[1][2]);
}

TEST_CASE("sweep emits one row per schedule") {
  const fs::path root = scratch("sweep");
  const CliResult r = invoke(with_tiny({"sweep", "--benchmark", "heat", "--param", "schedule", "--values",
                                        "0/0,40/160,200/800", "--out", root.string()}));
  REQUIRE(r.code == 0);
  const auto table = read_csv(root / "sweep.csv");
  REQUIRE(table.size() == 4);
  CHECK(table[1][1] == "0/0");
  CHECK(table[3][1] == "200/800");
  const auto m = nlohmann::json::parse(slurp(root / "schedule_40_160" / "manifest.json"));
  CHECK(m["resolved_config"]["t_d"] == 40);
  CHECK(m["resolved_config"]["t_r"] == 160);
}

TEST_CASE("function-space hessian and landscape exports") {
  const fs::path h = scratch("hessian");
  REQUIRE(invoke({"hessian", "--space", "function", "--out", h.string()}).code == 0);
  const auto table = read_csv(h / "hessian_summary.csv");
  REQUIRE(table.size() == 4);
  CHECK(table[1][4] == "inf");
  CHECK(fs::exists(h / "hessian_function_2.csv"));

  const fs::path l = scratch("landscape");
  REQUIRE(invoke({"landscape", "--space", "function", "--resolution", "11", "--out", l.string()}).code == 0);
  const auto slice = read_csv(l / "slice.csv");
  CHECK(slice.size() == 1 + 11 * 11);
  const auto anchors = read_csv(l / "anchors.csv");
  CHECK(anchors.size() == 5);
}
