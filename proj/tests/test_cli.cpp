#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "coopd/bench.hpp"

using namespace coopd;
using namespace coopd::bench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// CSV text without its trailing wall-clock column.
std::string drop_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COOPD_BENCH_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

BenchConfig small_lp() {
  BenchConfig c;
  c.experiment = Experiment::Lp;
  c.max_epochs = 50;
  c.seeds = {1, 2};
  return c;
}

}  // namespace

TEST(ParseGrid, SingleAndRange) {
  EXPECT_EQ(parse_grid("7"), (std::vector<int>{7}));
  EXPECT_EQ(parse_grid("-2:1"), (std::vector<int>{-2, -1, 0, 1}));
  EXPECT_EQ(parse_grid("-3"), (std::vector<int>{-3}));
  EXPECT_THROW(parse_grid("3:1"), ConfigError);
  EXPECT_THROW(parse_grid("x"), ConfigError);
  EXPECT_THROW(parse_grid("1:2:3"), ConfigError);
}

TEST(Resolved, DeskAndFullScaleDefaults) {
  BenchConfig c;
  c.experiment = Experiment::Bp1;
  auto r = resolved(c);
  EXPECT_EQ(r.m, 200);
  EXPECT_EQ(r.n, 800);
  EXPECT_EQ(r.pda_grid.front(), -15);
  EXPECT_EQ(r.pda_grid.back(), 15);
  EXPECT_EQ(r.methods, (std::vector<std::string>{"pda", "block-pda", "coo-pda"}));
  c.full_scale = true;
  r = resolved(c);
  EXPECT_EQ(r.m, 1000);
  EXPECT_EQ(r.n, 4000);
  EXPECT_EQ(r.sigma_exps, (std::vector<int>{11}));

  BenchConfig q;
  q.experiment = Experiment::Rpca;
  r = resolved(q);
  EXPECT_EQ(r.n1, 200);
  EXPECT_EQ(r.n2, 100);
  EXPECT_EQ(r.rank, 5);
  EXPECT_EQ(r.max_epochs, 1000);
}

TEST(Resolved, RejectsBadConfigurations) {
  BenchConfig c;
  c.gamma = 1.0;
  EXPECT_THROW(resolved(c), ConfigError);
  c = {};
  c.methods = {"nope"};
  EXPECT_THROW(resolved(c), ConfigError);
  c = {};
  c.methods = {"pda-r"};
  EXPECT_THROW(resolved(c), ConfigError);
  c = {};
  c.m = 900;
  EXPECT_THROW(resolved(c), ConfigError);
  c = {};
  c.experiment = Experiment::Rpca;
  c.n1 = 4;
  c.n2 = 3;
  c.rank = 5;
  EXPECT_THROW(resolved(c), ConfigError);
  c = {};
  c.seeds.clear();
  EXPECT_THROW(resolved(c), ConfigError);
}

TEST(CmdCompare, SingleMethodGivesOneSummaryEntry) {
  BenchConfig c = small_lp();
  c.methods = {"pda"};
  const auto res = cmd_compare(c);
  const auto j = nlohmann::json::parse(res.summary);
  EXPECT_EQ(j["methods"].size(), 1u);
  EXPECT_TRUE(j["methods"].contains("pda"));
  EXPECT_EQ(j["runs"].size(), 2u);
  EXPECT_FALSE(j["config"].contains("out"));
}

TEST(CmdCompare, PdaGridSelectsFewestEpochs) {
  BenchConfig c;
  c.experiment = Experiment::Bp1;
  c.m = 20;
  c.n = 60;
  c.methods = {"pda"};
  c.pda_grid = parse_grid("-2:4");
  c.max_epochs = 3000;
  const auto res = cmd_compare(c);
  ASSERT_EQ(res.runs.size(), 1u);
  const auto& r = res.runs.front();
  ASSERT_TRUE(r.report.converged());
  for (const auto& g : r.grid) {
    if (g.termination == "converged") {
      EXPECT_LE(r.report.epochs, g.epochs);
      if (g.epochs == r.report.epochs) EXPECT_GE(g.j, r.j);
    }
  }
}

TEST(CmdCompare, IdenticalConfigGivesIdenticalFiles) {
  const fs::path base = fs::temp_directory_path() / "coopd_cli_det";
  fs::remove_all(base);
  BenchConfig c = small_lp();
  c.out = (base / "a").string();
  write_outputs(run_experiment(c));
  c.out = (base / "b").string();
  c.jobs = 2;
  write_outputs(run_experiment(c));
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(base / "a")) {
    const fs::path other = base / "b" / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    if (e.path().extension() == ".csv") {
      ++csvs;
      EXPECT_EQ(drop_last_column(slurp(e.path())), drop_last_column(slurp(other)));
    } else {
      EXPECT_EQ(slurp(e.path()), slurp(other));
    }
  }
  EXPECT_EQ(csvs, 4u);
  fs::remove_all(base);
}

TEST(CmdNoisy, ScenariosAndEarlyStopping) {
  BenchConfig c;
  c.experiment = Experiment::BpNoisy;
  c.m = 40;
  c.n = 160;
  c.max_epochs = 30;
  const auto res = run_experiment(c);
  ASSERT_EQ(res.runs.size(), 5u);
  for (const auto& r : res.runs) {
    EXPECT_FALSE(r.scenario.empty());
    EXPECT_EQ(r.report.epochs, 30);
    EXPECT_GE(r.early_stop_epoch, 0);
    EXPECT_LE(r.early_stop_epoch, 30);
    EXPECT_TRUE(std::isfinite(r.noise_norm));
  }
}

TEST(CmdRpca, SmallInstanceTerminatesAndCountsSvds) {
  BenchConfig c;
  c.experiment = Experiment::Rpca;
  c.n1 = 30;
  c.n2 = 20;
  c.rank = 2;
  c.methods = {"coo-pda"};
  c.sigma_exps = {7};
  c.max_epochs = 3000;
  const auto res = cmd_rpca(c);
  ASSERT_EQ(res.runs.size(), 1u);
  const auto& r = res.runs.front();
  EXPECT_TRUE(r.report.converged());
  EXPECT_TRUE(std::isfinite(r.recovery_error));
  EXPECT_LE(static_cast<double>(r.report.svd_count), 0.6 * static_cast<double>(r.report.iterations));
}

TEST(Binary, NoArgumentsPrintsUsageAndSucceeds) { EXPECT_EQ(run_cli(""), 0); }

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("--experiment nope"), 2);
  EXPECT_EQ(run_cli("--experiment lp --gamma 2"), 2);
  EXPECT_EQ(run_cli("--bogus-flag"), 2);
  EXPECT_EQ(run_cli("--experiment lp --max-epochs 5 --out /proc/coopd_no_such_dir"), 3);
  EXPECT_EQ(run_cli("--experiment lp --max-epochs 5"), 0);
}

TEST(Binary, SeedFromEnvironment) {
  const fs::path dir = fs::temp_directory_path() / "coopd_cli_env";
  fs::remove_all(dir);
  const std::string cmd = "COOPD_SEED=7 " + std::string(COOPD_BENCH_PATH) +
                          " --experiment lp --max-epochs 5 --methods pda --out " + dir.string() + " > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "lp_pda_seed7.csv"));
  fs::remove_all(dir);
}
