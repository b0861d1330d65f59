// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "coopd/bench.hpp"
#include "coopd/metrics.hpp"
#include "coopd/problems.hpp"
#include "coopd/solvers.hpp"
#include "prox_cases.hpp"
#include "test_support.hpp"

using namespace coopd;
using namespace coopd::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double inf_norm(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

StepSizes coordinate_steps(const ProblemInstance& p, int j) {
  return default_steps(compute_block_norms(*p.a), 1.0 / (std::ldexp(1.0, j) * static_cast<double>(p.num_blocks())));
}

Verdict equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_x = 0.0, worst_dual = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index w = seed % 2 ? 10 : 1;
    const auto p = gen_bp_gaussian(50, 200, 0.05, {-10.0, 10.0}, 500 + seed, w);
    const auto s = coordinate_steps(p, 3);
    CooPdState c = make_coo_state(p, Vector::Zero(200), s.sigma);
    TsengState t = make_tseng_state(p, Vector::Zero(200));
    IndexStream ia(seed, p.num_blocks()), ib(seed, p.num_blocks());
    for (int k = 0; k < 1000; ++k) {
      coo_pda_step(c, p, s, ia.next());
      tseng_step(t, p, s, ib.next());
      worst_x = std::max(worst_x, inf_norm(c.x - t.x));
    }
    worst_dual = std::max({worst_dual, inf_norm(c.y - tseng_dual_y(t, s.sigma)),
                           inf_norm(c.u - tseng_dual_u(t, s.sigma))});
  }
  const double secs = seconds_since(t0);
  return {worst_x <= 1e-9 && worst_dual <= 1e-10 && secs < 5.0,
          fmt("max |x1-x2|_inf = %.3e, dual gap = %.3e, %.2f s", worst_x, worst_dual, secs)};
}

Verdict reduction() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = random_bp(30, 80, 5, 40 + seed, 80);
    const double nrm2 = full_sq_norm(*p.a);
    const double sigma = 0.5 / std::sqrt(nrm2), tau = 0.95 / (sigma * nrm2);
    const Vector x0 = random_vector(80, seed);
    CooPdState c = make_coo_state(p, x0, sigma);
    PdaState f = make_pda_state(p, x0, c.y);
    const StepSizes s = scalar_steps(1, tau, sigma);
    for (int k = 0; k < 500; ++k) {
      coo_pda_step(c, p, s, 0);
      pda_step(f, p, tau, sigma);
      worst = std::max({worst, inf_norm(c.x - f.x), inf_norm(c.y - f.y)});
    }
  }
  return {worst <= 1e-12, fmt("max trajectory gap = %.3e over 5 instances", worst)};
}

Verdict bookkeeping() {
  std::vector<std::pair<std::string, ProblemInstance>> battery;
  battery.emplace_back("bp w=1", gen_bp_gaussian(50, 200, 0.05, {-10.0, 10.0}, 1, 1));
  battery.emplace_back("bp w=10", gen_bp_gaussian(50, 200, 0.05, {-10.0, 10.0}, 2, 10));
  battery.emplace_back("bp dct", gen_bp_dct(40, 128, 4, 16, 3, 8));
  battery.emplace_back("lp", gen_lp(4, 8, 4));
  battery.emplace_back("consensus", gen_consensus(10, ring_edges(10), {}, 5));
  NoisyBpParams q;
  q.m = 40;
  q.n = 160;
  q.k_nonzero = 2;
  q.matrix = NoisyMatrix::LowRank;
  q.noise = NoiseKind::Rounding;
  q.block_width = 10;
  battery.emplace_back("noisy", gen_bp_noisy(q, 6));
  battery.emplace_back("rpca", gen_rpca(30, 20, 2, 0.05, 50.0, 7));

  bool ok = true;
  double worst_ratio = 0.0;
  std::int64_t audits = 0;
  for (const auto& [name, p] : battery) {
    RunOptions o;
    o.method = Method::CooPda;
    o.steps = name == "rpca" ? manual_steps(compute_block_norms(*p.a).lambda, 1.0 / 128.0, Vector::Ones(2))
                             : coordinate_steps(p, 2);
    o.max_epochs = 400;
    o.audit_every = 10;
    o.seed = 11;
    const auto out = run(p, o);
    const double bound = 1e-10 * (1.0 + o.steps.sigma * inf_norm(p.b));
    audits += out.report.audits;
    worst_ratio = std::max(worst_ratio, out.report.max_audit_deviation / bound);
    ok = ok && out.report.audits > 0 && out.report.max_audit_deviation <= bound;
  }
  return {ok, fmt("%lld audits over %zu runs, worst deviation / bound = %.3e", static_cast<long long>(audits),
                  battery.size(), worst_ratio)};
}

Verdict beta_recursion() {
  double min_coef = 0.0, worst_sum = 0.0, worst_replay = 0.0;
  std::string where;
  for (std::int64_t p : {1, 3, 7}) {
    const auto inst = random_bp(12, 4 * p, 2, 60 + static_cast<std::uint64_t>(p), 4);
    const auto s = coordinate_steps(inst, 1);
    TsengState t = make_tseng_state(inst, random_vector(4 * p, 8));
    std::vector<Vector> xs{t.x};
    IndexStream idx(static_cast<std::uint64_t>(p), p);
    for (std::int64_t k = 0; k <= 200; ++k) {
      const auto beta = beta_coefficients(k, p);
      Vector rec = Vector::Zero(4 * p);
      for (std::size_t j = 0; j < beta.size(); ++j) {
        rec += beta[j] * xs[j];
        if (beta[j] < min_coef) {
          min_coef = beta[j];
          where = fmt("p=%lld k=%lld j=%zu", static_cast<long long>(p), static_cast<long long>(k), j);
        }
      }
      worst_sum = std::max(worst_sum, std::abs(std::accumulate(beta.begin(), beta.end(), 0.0) - 1.0));
      worst_replay = std::max(worst_replay, inf_norm(rec - t.s));
      tseng_step(t, inst, s, idx.next());
      xs.push_back(t.x);
    }
  }
  const bool ok = min_coef >= -1e-14 && worst_sum <= 1e-12 && worst_replay <= 1e-10;
  return {ok, fmt("min coefficient = %.3e (%s), |sum-1| = %.3e, replay = %.3e", min_coef,
                  where.empty() ? "none negative" : where.c_str(), worst_sum, worst_replay)};
}

Verdict prox_inequality() {
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_name;
  const auto catalog = prox_catalog();
  for (const auto& pc : catalog) {
    SplitMix64 gen(derive_seed(2024, pc.dim));
    for (int draw = 0; draw < 20; ++draw) {
      const double step = std::exp(gen.uniform(std::log(1e-2), std::log(1e2)));
      const Vector z = pc.input(gen);
      std::vector<Vector> pts;
      for (int i = 0; i < 200; ++i) pts.push_back(pc.domain_point(gen));
      const double margin = prox_inequality_margin(pc.f, step, z, pts);
      if (margin < worst) {
        worst = margin;
        worst_name = pc.name;
      }
      ok = ok && margin >= 0.0;
    }
  }
  return {ok, fmt("%zu members, smallest slack-adjusted margin = %.3e (%s)", catalog.size(), worst,
                  worst_name.c_str())};
}

Verdict bp_desk() {
  const auto t0 = std::chrono::steady_clock::now();
  bench::BenchConfig c;
  c.experiment = bench::Experiment::Bp1;
  c.seeds = {0, 1, 2};
  const auto res = bench::cmd_compare(c);
  const double secs = seconds_since(t0);
  std::vector<double> coo, pda;
  bool ok = true;
  double worst_err = 0.0;
  for (const auto& r : res.runs) {
    if (r.method == "pda") {
      pda.push_back(static_cast<double>(r.report.epochs));
      continue;
    }
    if (r.method == "coo-pda") coo.push_back(static_cast<double>(r.report.epochs));
    worst_err = std::max(worst_err, r.recovery_error);
    ok = ok && r.report.converged() && r.recovery_error <= 1e-4;
  }
  const double mc = median(coo), mp = median(pda);
  ok = ok && coo.size() == 3 && pda.size() == 3 && mc < mp && secs < 120.0;
  return {ok, fmt("median epochs coo-pda %.0f vs pda %.0f, worst signal error %.3e, %.1f s", mc, mp, worst_err, secs)};
}

Verdict inconsistent() {
  NoisyBpParams q;
  q.m = 200;
  q.n = 800;
  q.k_nonzero = 10;
  q.matrix = NoisyMatrix::LowRank;
  q.noise = NoiseKind::Rounding;
  q.block_width = 50;
  const auto p = gen_bp_noisy(q, 0);
  const Matrix a = p.a->to_dense();
  Eigen::BDCSVD<Matrix> svd(a);
  svd.setThreshold(1e-10);
  const auto rank = svd.rank();

  RunOptions o;
  o.method = Method::CooPda;
  o.steps = coordinate_steps(p, 0);
  o.stop = StoppingRule::never();
  o.max_epochs = 2000;
  const auto out = run(p, o);
  const double ne0 = out.report.history.front().normal_eq;
  const Vector r = naive_matvec(a, out.x) - p.b;
  const double ne = naive_matvec(a.transpose(), r).norm();
  const Vector& xd = *p.truth.x;
  const double noise = (p.b - naive_matvec(a, xd)).norm();
  const double image = naive_matvec(a, out.x - xd).norm();
  const bool ok = rank == 100 && out.report.termination != "diverged" && out.report.epochs == 2000 &&
                  ne < 1e-4 * ne0 && image <= noise + 1e-3;
  return {ok, fmt("rank %lld, %lld epochs (%s), normal-eq %.3e of initial, |A(x-x*)| = %.4f vs |eps| = %.4f",
                  static_cast<long long>(rank), static_cast<long long>(out.report.epochs),
                  out.report.termination.c_str(), ne / ne0, image, noise)};
}

Verdict rate() {
  std::vector<double> ratios;
  double worst_oracle = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto lp = gen_lp(4, 8, seed);
    const Matrix a = lp.a->to_dense();
    Vector cost(8), vertex;
    for (Index j = 0; j < 8; ++j) cost[j] = lp.g.value(Vector::Unit(8, j));
    const double value = brute_force_lp_value(a, lp.b, cost, &vertex);
    worst_oracle = std::max(worst_oracle, std::abs(value - *lp.truth.g_opt));
    const double f_star = 0.5 * (naive_matvec(a, vertex) - lp.b).squaredNorm();

    const auto steps = default_steps(compute_block_norms(*lp.a), 0.1);
    TsengState t = make_tseng_state(lp, Vector::Zero(8));
    IndexStream idx(seed, lp.num_blocks());
    double sup100 = 0.0, sup1600 = 0.0;
    for (int k = 1; k <= 1600; ++k) {
      tseng_step(t, lp, steps, idx.next());
      const double gap = 0.5 * (naive_matvec(a, t.s) - lp.b).squaredNorm() - f_star;
      const double v = static_cast<double>(k) * static_cast<double>(k) * gap;
      if (k <= 100) sup100 = std::max(sup100, v);
      sup1600 = std::max(sup1600, v);
    }
    ratios.push_back(sup1600 / sup100);
  }
  const double med = median(ratios);
  return {med <= 2.0 && worst_oracle <= 1e-8,
          fmt("median sup_1600 / sup_100 = %.3f (max %.3f), oracle agreement %.1e", med,
              *std::max_element(ratios.begin(), ratios.end()), worst_oracle)};
}

Verdict rpca() {
  const auto t0 = std::chrono::steady_clock::now();
  bench::BenchConfig c;
  c.experiment = bench::Experiment::Rpca;
  c.methods = {"coo-pda", "coo-pda-r"};
  const auto res = bench::cmd_rpca(c);
  const double secs = seconds_since(t0);
  bool ok = res.runs.size() == 2 && secs < 180.0;
  std::string detail;
  for (const auto& r : res.runs) {
    const double ratio = static_cast<double>(r.report.svd_count) / static_cast<double>(r.report.iterations);
    ok = ok && r.report.converged() && r.recovery_error <= 1e-3;
    if (r.method == "coo-pda") ok = ok && ratio <= 0.6;
    detail += fmt("%s: %s after %lld epochs, error %.3e, svd/iter %.3f; ", r.method.c_str(),
                  r.report.termination.c_str(), static_cast<long long>(r.report.epochs), r.recovery_error, ratio);
  }
  return {ok, detail + fmt("%.1f s", secs)};
}

Verdict consensus() {
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SplitMix64 gen(derive_seed(77, seed));
    Vector a(10);
    for (Index i = 0; i < 10; ++i) a[i] = gen.uniform(-10.0, 10.0);
    const auto p = gen_consensus(10, ring_edges(10), a, seed);
    RunOptions o;
    o.method = Method::CooPda;
    o.steps = coordinate_steps(p, 0);
    o.stop = StoppingRule::never();
    o.max_epochs = 2000;
    o.seed = seed;
    const auto out = run(p, o);
    std::vector<double> sorted(a.data(), a.data() + a.size());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted[4], hi = sorted[5];
    for (Index i = 0; i < 10; ++i) {
      const double d = std::max({lo - out.x[i], out.x[i] - hi, 0.0});
      worst = std::max(worst, d);
    }
    ok = ok && out.report.termination != "diverged";
  }
  ok = ok && worst <= 1e-4;
  return {ok, fmt("max distance to the median interval over 5 seeds = %.3e", worst)};
}

Verdict determinism() {
  std::vector<bench::BenchConfig> configs;
  bench::BenchConfig lp;
  lp.experiment = bench::Experiment::Lp;
  lp.methods = {"pda", "coo-pda", "tseng-pda"};
  lp.seeds = {3, 4};
  lp.max_epochs = 300;
  configs.push_back(lp);
  bench::BenchConfig bp;
  bp.experiment = bench::Experiment::Bp1;
  bp.m = 40;
  bp.n = 160;
  bp.sigma_exps = {6, 7};
  bp.pda_grid = {4, 5};
  bp.max_epochs = 3000;
  configs.push_back(bp);
  bench::BenchConfig cons;
  cons.experiment = bench::Experiment::Consensus;
  cons.max_epochs = 300;
  cons.seeds = {9};
  configs.push_back(cons);

  bool ok = true;
  std::size_t files = 0;
  for (const auto& c : configs) {
    const auto first = bench::run_experiment(c);
    const auto second = bench::run_experiment(c);
    ok = ok && first.summary == second.summary && first.runs.size() == second.runs.size();
    for (std::size_t i = 0; ok && i < first.runs.size(); ++i) {
      ok = to_csv(first.runs[i].report, false) == to_csv(second.runs[i].report, false);
      ++files;
    }
  }
  return {ok, fmt("%zu CSV files and %zu summaries compared", files, configs.size())};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"Tseng form and coordinate method generate the same sequence", equivalence},
      {"single block reduces to the full primal-dual method", reduction},
      {"dual bookkeeping invariant at audited epochs", bookkeeping},
      {"averaging coefficients: nonnegative, sum to one, replay s^k", beta_recursion},
      {"prox inequality across the catalog", prox_inequality},
      {"basis pursuit recovery at desk scale", bp_desk},
      {"inconsistent low-rank system with rounding noise", inconsistent},
      {"O(1/k^2) rate diagnostic on LP", rate},
      {"RPCA recovery with exact and randomized SVT", rpca},
      {"consensus value matches the median", consensus},
      {"deterministic CSV output", determinism},
  };
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "--only expects 1..%zu\n", criteria.size());
    return 2;
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2zu. %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
