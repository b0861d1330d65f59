#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopd/bench.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace coopd::bench;

  CLI::App app{"Benchmarks for the full and coordinate primal-dual methods."};
  app.set_help_flag("-h,--help", "Print this help and exit");

  BenchConfig c;
  std::string experiment = "bp1";
  std::string sigma_exp;
  std::string pda_grid;
  std::string methods;
  std::vector<std::uint64_t> seeds;
  long long m = 0, n = 0, n1 = 0, n2 = 0, rank = 0, width = 50;

  app.add_option("--experiment", experiment,
                 "bp1 | bp2 | bp-noisy | rpca | lp | consensus | composite")
      ->capture_default_str();
  app.add_option("--m", m, "Rows (default: 200 desk, 1000 full; lp 4; composite 6)");
  app.add_option("--n", n, "Columns (default: 800 desk, 4000 full; lp 8; consensus nodes 10; composite 4)");
  app.add_option("--n1", n1, "RPCA rows (default: 200 desk, 1000 full)");
  app.add_option("--n2", n2, "RPCA columns (default: 100 desk, 500 full)");
  app.add_option("--rank", rank, "RPCA rank (default: 5 desk, 20 full)");
  app.add_option("--width", width, "Block width for block-pda")->capture_default_str();
  app.add_option("--sigma-exp", sigma_exp,
                 "Sigma exponent j or grid a:b for coordinate methods "
                 "(default: bp1 6:12, bp2 -4:2 desk; bp1 11, bp2 8 full; bp-noisy 25, rpca -6:12, others 0)");
  app.add_option("--pda-grid", pda_grid, "Sigma exponent grid a:b for full PDA (default: bp -15:15, rpca -6:12)");
  app.add_option("--gamma", c.gamma, "Stepsize safety factor in (0, 1)")->capture_default_str();
  app.add_option("--eps", c.eps, "Stopping tolerance")->capture_default_str();
  app.add_option("--max-epochs", c.max_epochs, "Epoch budget (default: bp 20000, rpca 1000, others 2000)");
  app.add_option("--seed", seeds, "Seed (repeatable; default: $COOPD_SEED or 0)");
  app.add_option("--methods", methods,
                 "Comma-separated subset of pda, block-pda, coo-pda, tseng-pda, pda-r, coo-pda-r");
  app.add_option("--noise-std", c.noise_std, "Gaussian noise level for bp-noisy")->capture_default_str();
  app.add_option("--out", c.out, "Output directory for CSV files and summary.json");
  app.add_option("--jobs", c.jobs, "Concurrent runs")->capture_default_str();
  app.add_flag("--full-scale", c.full_scale, "Use the full problem dimensions");

  if (argc <= 1) {
    std::cout << app.help();
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    c.experiment = parse_experiment(experiment);
    c.m = m;
    c.n = n;
    c.n1 = n1;
    c.n2 = n2;
    c.rank = rank;
    c.width = width;
    if (!sigma_exp.empty()) c.sigma_exps = parse_grid(sigma_exp);
    if (!pda_grid.empty()) c.pda_grid = parse_grid(pda_grid);
    if (!methods.empty()) c.methods = split_csv(methods);
    if (seeds.empty()) {
      if (const char* env = std::getenv("COOPD_SEED")) {
        try {
          seeds.push_back(std::stoull(env));
        } catch (const std::exception&) {
          throw ConfigError("COOPD_SEED is not an unsigned integer");
        }
      } else {
        seeds.push_back(0);
      }
    }
    c.seeds = seeds;

    const BenchResult result = run_experiment(c);
    write_outputs(result);
    std::cout << result.summary;
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }
}
