#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopd/problems.hpp"
#include "coopd/solvers.hpp"

namespace coopd::bench {

enum class Experiment { Bp1, Bp2, BpNoisy, Rpca, Lp, Consensus, Composite };

Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

/// Thrown for invalid configurations (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when reports cannot be written (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  Experiment experiment = Experiment::Bp1;
  // Zero means the experiment default (desk or full scale).
  Index m = 0;
  Index n = 0;
  Index n1 = 0;
  Index n2 = 0;
  Index rank = 0;
  Index width = 50;
  std::vector<int> sigma_exps;  // coordinate methods; empty: experiment default
  std::vector<int> pda_grid;    // full PDA; empty: experiment default
  double gamma = 0.99;
  double eps = 1e-6;
  std::int64_t max_epochs = 0;  // 0: experiment default
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> methods;  // empty: experiment default
  double noise_std = 1.0;
  std::string out;  // output directory; empty writes nothing
  int jobs = 1;
  bool full_scale = false;
};

/// Fills experiment defaults (dimensions under full_scale, grids, methods,
/// epoch budget) and validates. Throws ConfigError.
BenchConfig resolved(BenchConfig config);

/// "a:b" or "j" -> list of integers.
std::vector<int> parse_grid(const std::string& text);

struct GridPoint {
  int j = 0;
  std::int64_t epochs = 0;
  std::string termination;
};

struct MethodRun {
  std::string method;
  std::uint64_t seed = 0;
  int j = 0;  // selected sigma exponent
  std::vector<GridPoint> grid;
  RunReport report;
  double recovery_error = std::numeric_limits<double>::quiet_NaN();
  std::string scenario;  // noisy experiment only
  std::int64_t early_stop_epoch = -1;
  double noise_norm = std::numeric_limits<double>::quiet_NaN();
  double final_image_error = std::numeric_limits<double>::quiet_NaN();  // ||A(x - x-dagger)||
  double gap_to_truth = std::numeric_limits<double>::quiet_NaN();
};

struct BenchResult {
  BenchConfig config;
  std::vector<MethodRun> runs;
  std::string summary;  // JSON text
};

/// Every requested method on identical instances per seed; grids pick the
/// run with the fewest epochs to termination (ties: smaller j).
BenchResult cmd_compare(const BenchConfig& config);

/// Block-PDA on the noisy scenarios (Gaussian/low-rank matrix x Gaussian/
/// rounding noise, plus the DCT-dictionary signal), logging per-epoch signal
/// error and normal-equation residual.
BenchResult cmd_noisy(const BenchConfig& config);

/// PDA and Coo-PDA with exact and randomized SVT.
BenchResult cmd_rpca(const BenchConfig& config);

/// Dispatches on config.experiment.
BenchResult run_experiment(const BenchConfig& config);

/// Writes per-run CSVs and summary.json under config.out. Throws IoError.
void write_outputs(const BenchResult& result);

}  // namespace coopd::bench
