#include "coopd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "coopd/report_json.hpp"

namespace coopd::bench {
namespace {

using nlohmann::json;
using InstancePtr = std::shared_ptr<const ProblemInstance>;

const std::map<std::string, Experiment>& experiment_table() {
  static const std::map<std::string, Experiment> t = {
      {"bp1", Experiment::Bp1},     {"bp2", Experiment::Bp2},
      {"bp-noisy", Experiment::BpNoisy}, {"rpca", Experiment::Rpca},
      {"lp", Experiment::Lp},       {"consensus", Experiment::Consensus},
      {"composite", Experiment::Composite}};
  return t;
}

bool is_bp(Experiment e) { return e == Experiment::Bp1 || e == Experiment::Bp2; }

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int j = lo; j <= hi; ++j) v.push_back(j);
  return v;
}

/// Runs fn(0..count-1) on up to `jobs` threads; results keep index order.
template <class T>
std::vector<T> parallel_map(std::size_t count, int jobs, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

ProblemInstance with_backend(const ProblemInstance& p, SvdBackend backend) {
  std::vector<BlockFunction> blocks;
  for (Index i = 0; i < p.g.num_blocks(); ++i) {
    BlockFunction f = p.g.block(i);
    if (auto* nuc = std::get_if<NuclearFn>(&f)) nuc->backend = backend;
    blocks.push_back(std::move(f));
  }
  ProblemInstance out = p;
  out.g = SeparableFunction(p.g.structure(), std::move(blocks));
  return out;
}

double sigma_exp2(int j) { return std::ldexp(1.0, j); }

/// One (method, instance) pairing with a sigma-exponent grid.
struct GridSpec {
  std::string method;
  Method solver = Method::CooPda;
  InstancePtr problem;
  std::vector<int> grid;
  int center = 0;  // grid points nearest to this are tried first
  std::function<std::optional<StepSizes>(int)> steps;
  StoppingRule stop;
  std::int64_t max_epochs = 0;
  std::uint64_t seed = 0;
};

MethodRun run_grid(const GridSpec& spec) {
  std::vector<int> order = spec.grid;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const int da = std::abs(a - spec.center), db = std::abs(b - spec.center);
    return da != db ? da < db : a < b;
  });

  MethodRun best;
  best.method = spec.method;
  best.seed = spec.seed;
  std::optional<RunOutcome> best_out;
  bool best_converged = false;
  std::vector<GridPoint> points;

  for (int j : order) {
    const auto steps = spec.steps(j);
    if (!steps) {
      points.push_back({j, 0, "invalid-steps"});
      continue;
    }
    RunOptions o;
    o.method = spec.solver;
    o.steps = *steps;
    o.stop = spec.stop;
    o.seed = spec.seed;
    o.max_epochs = best_converged ? std::min(spec.max_epochs, best_out->report.epochs) : spec.max_epochs;
    o.label = spec.method;
    RunOutcome out = run(*spec.problem, o);
    const bool conv = out.report.converged();
    std::string term = out.report.termination;
    if (!conv && best_converged && o.max_epochs < spec.max_epochs) term = "pruned";
    points.push_back({j, out.report.epochs, term});

    bool better = false;
    if (!best_out) {
      better = true;
    } else if (conv && !best_converged) {
      better = true;
    } else if (conv && best_converged) {
      better = out.report.epochs < best_out->report.epochs ||
               (out.report.epochs == best_out->report.epochs && j < best.j);
    } else if (!conv && !best_converged) {
      better = j < best.j;
    }
    if (better) {
      best.j = j;
      best_converged = conv;
      best_out = std::move(out);
    }
  }
  if (!best_out) throw ConfigError(spec.method + ": no valid stepsize in the sigma grid");
  std::sort(points.begin(), points.end(), [](const GridPoint& a, const GridPoint& b) { return a.j < b.j; });
  best.grid = std::move(points);
  best.report = std::move(best_out->report);

  const ProblemInstance& p = *spec.problem;
  const Vector& x = best_out->x;
  if (auto e = p.signal_error(x)) best.recovery_error = *e;
  if (p.truth.consensus_interval) {
    const auto [lo, hi] = *p.truth.consensus_interval;
    double d = 0.0;
    for (Index i = 0; i < x.size(); ++i) d = std::max(d, std::max({lo - x[i], x[i] - hi, 0.0}));
    best.recovery_error = d;
  }
  if (p.truth.g_opt) best.gap_to_truth = p.g.value(x) - *p.truth.g_opt;
  if (p.truth.x && p.truth.noise) {
    best.noise_norm = p.truth.noise->norm();
    best.final_image_error = p.a->apply(x - *p.truth.x).norm();
  }
  Index arg = -1;
  double low = std::numeric_limits<double>::infinity();
  for (const auto& r : best.report.history) {
    if (r.signal_err < low) {
      low = r.signal_err;
      arg = r.epoch;
    }
  }
  best.early_stop_epoch = arg;
  return best;
}

// ------------------------------------------------------------ instances

InstancePtr make_instance(const BenchConfig& c, std::uint64_t seed) {
  switch (c.experiment) {
    case Experiment::Bp1:
      return std::make_shared<ProblemInstance>(gen_bp_gaussian(c.m, c.n, 0.05, {-10.0, 10.0}, seed));
    case Experiment::Bp2: {
      const Index k = std::max<Index>(1, c.n / 80);
      return std::make_shared<ProblemInstance>(gen_bp_dct(c.m, c.n, k, std::min(c.n, 2 * k), seed));
    }
    case Experiment::Rpca:
      return std::make_shared<ProblemInstance>(gen_rpca(c.n1, c.n2, c.rank, 0.05, 500.0, seed));
    case Experiment::Lp:
      return std::make_shared<ProblemInstance>(gen_lp(c.m, c.n, seed));
    case Experiment::Consensus:
      return std::make_shared<ProblemInstance>(gen_consensus(c.n, ring_edges(c.n), {}, seed));
    case Experiment::Composite: {
      SplitMix64 gen(derive_seed(seed, 0));
      RowMatrix k(c.m, c.n);
      for (Index i = 0; i < c.m; ++i)
        for (Index j = 0; j < c.n; ++j) k(i, j) = gen.normal();
      auto inst = gen_composite(dense_operator(std::move(k), 1), ZeroFn{}, L1Fn{1.0, {}});
      inst.seed = seed;
      inst.truth.x = Vector::Zero(inst.cols());
      inst.truth.signal_length = c.n;
      return std::make_shared<ProblemInstance>(std::move(inst));
    }
    case Experiment::BpNoisy:
      break;
  }
  throw ConfigError("make_instance: unsupported experiment");
}

struct NoisyScenario {
  std::string name;
  NoisyMatrix matrix;
  NoiseKind noise;
  Dictionary dictionary;
  double noise_std;
  int sigma_exp;
};

std::vector<NoisyScenario> noisy_scenarios(const BenchConfig& c) {
  const int j = c.sigma_exps.empty() ? 25 : c.sigma_exps.front();
  const int jd = c.sigma_exps.size() > 1 ? c.sigma_exps[1] : 22;
  return {
      {"gaussian-gaussian", NoisyMatrix::Gaussian, NoiseKind::Gaussian, Dictionary::None, c.noise_std, j},
      {"gaussian-rounding", NoisyMatrix::Gaussian, NoiseKind::Rounding, Dictionary::None, 0.0, j},
      {"lowrank-gaussian", NoisyMatrix::LowRank, NoiseKind::Gaussian, Dictionary::None, c.noise_std, j},
      {"lowrank-rounding", NoisyMatrix::LowRank, NoiseKind::Rounding, Dictionary::None, 0.0, j},
      {"dct-gaussian", NoisyMatrix::Gaussian, NoiseKind::Gaussian, Dictionary::Dct, std::sqrt(10.0), jd},
  };
}

// ------------------------------------------------------------ method specs

StoppingRule stop_rule(const BenchConfig& c) {
  if (is_bp(c.experiment)) return StoppingRule::bp(c.eps);
  if (c.experiment == Experiment::Rpca) return StoppingRule::rpca(c.eps);
  return StoppingRule::never();
}

bool is_coordinate(const std::string& m) {
  return m == "coo-pda" || m == "block-pda" || m == "tseng-pda" || m == "coo-pda-r";
}

GridSpec make_spec(const BenchConfig& c, const std::string& method, const InstancePtr& base,
                   std::uint64_t seed) {
  GridSpec s;
  s.method = method;
  s.seed = seed;
  s.stop = stop_rule(c);
  s.max_epochs = c.max_epochs;
  InstancePtr p = base;
  if (method == "pda-r" || method == "coo-pda-r") {
    p = std::make_shared<ProblemInstance>(with_backend(*base, SvdBackend::Randomized));
  }
  const bool rpca = c.experiment == Experiment::Rpca;

  if (!is_coordinate(method)) {
    s.solver = Method::Pda;
    s.problem = p;
    s.grid = c.pda_grid;
    s.center = rpca ? 7 : 5;
    const double norm = std::sqrt(full_sq_norm(*p->a));
    const Index blocks = p->num_blocks();
    s.steps = [norm, blocks](int j) -> std::optional<StepSizes> {
      return scalar_steps(blocks, sigma_exp2(j) / norm, 1.0 / (sigma_exp2(j) * norm));
    };
    return s;
  }

  s.solver = method == "tseng-pda" ? Method::TsengPda : Method::CooPda;
  if (!rpca) p = std::make_shared<ProblemInstance>(p->reblocked(method == "block-pda" ? c.width : 1));
  s.problem = p;
  s.grid = c.sigma_exps;
  if (!c.sigma_exps.empty()) {
    const auto [lo, hi] = std::minmax_element(c.sigma_exps.begin(), c.sigma_exps.end());
    s.center = (*lo + *hi) / 2;
  }
  const BlockNorms norms = compute_block_norms(*p->a);
  const double nblock = static_cast<double>(p->num_blocks());
  const double gamma = c.gamma;
  if (rpca) {
    s.center = 7;
    s.steps = [norms, gamma](int j) -> std::optional<StepSizes> {
      return default_steps(norms, 1.0 / sigma_exp2(j), gamma);
    };
  } else {
    s.steps = [norms, nblock, gamma](int j) -> std::optional<StepSizes> {
      return default_steps(norms, 1.0 / (sigma_exp2(j) * nblock), gamma);
    };
  }
  return s;
}

// ------------------------------------------------------------ summaries

json stats(std::vector<double> v) {
  if (v.empty()) return nullptr;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  return {{"median", median}, {"mean", mean}, {"min", v.front()}, {"max", v.back()}};
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_name(const BenchConfig& c, const MethodRun& r) {
  std::string name = experiment_name(c.experiment) + "_" + r.method;
  if (!r.scenario.empty()) name += "_" + r.scenario;
  return name + "_seed" + std::to_string(r.seed) + ".csv";
}

json config_json(const BenchConfig& c) {
  return {{"experiment", experiment_name(c.experiment)},
          {"m", c.m},
          {"n", c.n},
          {"n1", c.n1},
          {"n2", c.n2},
          {"rank", c.rank},
          {"width", c.width},
          {"sigma_exps", c.sigma_exps},
          {"pda_grid", c.pda_grid},
          {"gamma", c.gamma},
          {"eps", c.eps},
          {"max_epochs", c.max_epochs},
          {"seeds", c.seeds},
          {"methods", c.methods},
          {"noise_std", c.noise_std},
          {"full_scale", c.full_scale}};
}

std::string summarize(const BenchConfig& c, const std::vector<MethodRun>& runs) {
  json runs_json = json::array();
  std::map<std::string, std::vector<const MethodRun*>> by_method;
  for (const auto& r : runs) {
    json grid = json::array();
    for (const auto& g : r.grid) grid.push_back({{"j", g.j}, {"epochs", g.epochs}, {"termination", g.termination}});
    json entry = {{"method", r.method},
                  {"seed", r.seed},
                  {"j", r.j},
                  {"grid", grid},
                  {"epochs", r.report.epochs},
                  {"iterations", r.report.iterations},
                  {"terminated", r.report.converged()},
                  {"termination", r.report.termination},
                  {"svd_count", r.report.svd_count},
                  {"max_audit_deviation", num(r.report.max_audit_deviation)},
                  {"recovery_error", num(r.recovery_error)},
                  {"final_metrics", final_metrics_json(r.report)},
                  {"csv", csv_name(c, r)}};
    if (!r.scenario.empty()) {
      entry["scenario"] = r.scenario;
      entry["early_stop_epoch"] = r.early_stop_epoch;
      entry["noise_norm"] = num(r.noise_norm);
      entry["final_image_error"] = num(r.final_image_error);
      entry["initial_normal_eq"] = num(r.report.history.front().normal_eq);
    }
    if (std::isfinite(r.gap_to_truth)) entry["gap_to_truth"] = r.gap_to_truth;
    runs_json.push_back(std::move(entry));
    by_method[r.scenario.empty() ? r.method : r.method + "/" + r.scenario].push_back(&r);
  }
  json methods = json::object();
  for (const auto& [name, list] : by_method) {
    std::vector<double> epochs, iters, rec;
    int terminated = 0;
    for (const auto* r : list) {
      epochs.push_back(static_cast<double>(r->report.epochs));
      iters.push_back(static_cast<double>(r->report.iterations));
      if (std::isfinite(r->recovery_error)) rec.push_back(r->recovery_error);
      terminated += r->report.converged() ? 1 : 0;
    }
    methods[name] = {{"runs", list.size()},
                     {"terminated", terminated},
                     {"epochs", stats(epochs)},
                     {"iterations", stats(iters)},
                     {"recovery_error", stats(rec)}};
  }
  json summary = {{"schema_version", kReportSchemaVersion},
                  {"config", config_json(c)},
                  {"methods", methods},
                  {"runs", runs_json}};
  return summary.dump(2) + "\n";
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"pda", "block-pda", "coo-pda", "tseng-pda", "pda-r", "coo-pda-r"};
  return m;
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  const auto& t = experiment_table();
  auto it = t.find(name);
  if (it == t.end()) throw ConfigError("unknown experiment '" + name + "'");
  return it->second;
}

std::string experiment_name(Experiment e) {
  for (const auto& [k, v] : experiment_table())
    if (v == e) return k;
  return "unknown";
}

std::vector<int> parse_grid(const std::string& text) {
  auto to_int = [&](const std::string& s) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError("invalid sigma exponent '" + text + "'");
    }
    if (pos != s.size()) throw ConfigError("invalid sigma exponent '" + text + "'");
    return v;
  };
  const auto colon = text.find(':', 1);
  if (colon == std::string::npos) return {to_int(text)};
  const int lo = to_int(text.substr(0, colon));
  const int hi = to_int(text.substr(colon + 1));
  if (lo > hi) throw ConfigError("empty sigma grid '" + text + "'");
  return range(lo, hi);
}

BenchConfig resolved(BenchConfig c) {
  const Experiment e = c.experiment;
  const bool fs = c.full_scale;
  auto set_if_zero = [](Index& v, Index def) {
    if (v == 0) v = def;
  };
  switch (e) {
    case Experiment::Bp1:
    case Experiment::Bp2:
    case Experiment::BpNoisy:
      set_if_zero(c.m, fs ? 1000 : 200);
      set_if_zero(c.n, fs ? 4000 : 800);
      break;
    case Experiment::Rpca:
      set_if_zero(c.n1, fs ? 1000 : 200);
      set_if_zero(c.n2, fs ? 500 : 100);
      set_if_zero(c.rank, fs ? 20 : 5);
      break;
    case Experiment::Lp:
      set_if_zero(c.m, 4);
      set_if_zero(c.n, 8);
      break;
    case Experiment::Consensus:
      set_if_zero(c.n, 10);
      c.m = 0;
      break;
    case Experiment::Composite:
      set_if_zero(c.m, 6);
      set_if_zero(c.n, 4);
      break;
  }
  if (c.methods.empty()) {
    switch (e) {
      case Experiment::Bp1:
      case Experiment::Bp2:
        c.methods = {"pda", "block-pda", "coo-pda"};
        break;
      case Experiment::BpNoisy:
        c.methods = {"block-pda"};
        break;
      case Experiment::Rpca:
        c.methods = {"pda", "coo-pda", "pda-r", "coo-pda-r"};
        break;
      default:
        c.methods = {"pda", "coo-pda"};
    }
  }
  if (c.sigma_exps.empty()) {
    switch (e) {
      case Experiment::Bp1:
        c.sigma_exps = fs ? std::vector<int>{11} : range(6, 12);
        break;
      case Experiment::Bp2:
        c.sigma_exps = fs ? std::vector<int>{8} : range(-4, 2);
        break;
      case Experiment::BpNoisy:
        c.sigma_exps = {25, 22};
        break;
      case Experiment::Rpca:
        c.sigma_exps = range(-6, 12);
        break;
      default:
        c.sigma_exps = {0};
    }
  }
  if (c.pda_grid.empty()) {
    if (is_bp(e)) c.pda_grid = range(-15, 15);
    else if (e == Experiment::Rpca) c.pda_grid = range(-6, 12);
    else c.pda_grid = {0};
  }
  if (c.max_epochs == 0) {
    c.max_epochs = is_bp(e) ? 20000 : e == Experiment::Rpca ? 1000 : 2000;
  }

  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.max_epochs < 0) throw ConfigError("--max-epochs must be >= 0");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("--gamma must lie in (0, 1)");
  if (!(c.eps > 0.0)) throw ConfigError("--eps must be positive");
  if (c.width < 1) throw ConfigError("--width must be >= 1");
  if (c.jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (c.noise_std < 0.0) throw ConfigError("--noise-std must be >= 0");
  for (const auto& m : c.methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
    if ((m == "pda-r" || m == "coo-pda-r") && e != Experiment::Rpca) {
      throw ConfigError("method '" + m + "' applies to the rpca experiment only");
    }
  }
  const bool bp_like = is_bp(e) || e == Experiment::BpNoisy || e == Experiment::Lp;
  if (bp_like && !(c.m > 0 && c.m < c.n)) throw ConfigError("need 0 < m < n");
  if (e == Experiment::Consensus && c.n < 2) throw ConfigError("consensus needs n >= 2 nodes");
  if (e == Experiment::Composite && (c.m < 1 || c.n < 1)) throw ConfigError("composite needs m, n >= 1");
  if (e == Experiment::Rpca && (c.rank < 1 || c.rank > std::min(c.n1, c.n2))) {
    throw ConfigError("rpca needs 1 <= rank <= min(n1, n2)");
  }
  if (e == Experiment::BpNoisy && c.m % 2 != 0) throw ConfigError("bp-noisy needs even m (low-rank inner dimension m/2)");
  return c;
}

BenchResult cmd_compare(const BenchConfig& config) {
  BenchResult res;
  res.config = resolved(config);
  const BenchConfig& c = res.config;
  std::vector<InstancePtr> instances = parallel_map<InstancePtr>(
      c.seeds.size(), c.jobs, [&](std::size_t s) { return make_instance(c, c.seeds[s]); });
  std::vector<std::pair<std::size_t, std::string>> tasks;
  for (std::size_t s = 0; s < c.seeds.size(); ++s)
    for (const auto& m : c.methods) tasks.emplace_back(s, m);
  res.runs = parallel_map<MethodRun>(tasks.size(), c.jobs, [&](std::size_t t) {
    const auto& [s, m] = tasks[t];
    return run_grid(make_spec(c, m, instances[s], c.seeds[s]));
  });
  res.summary = summarize(c, res.runs);
  return res;
}

BenchResult cmd_noisy(const BenchConfig& config) {
  BenchResult res;
  res.config = resolved(config);
  const BenchConfig& c = res.config;
  const auto scenarios = noisy_scenarios(c);
  struct Task {
    std::uint64_t seed;
    const NoisyScenario* scenario;
    std::string method;
  };
  std::vector<Task> tasks;
  for (auto seed : c.seeds)
    for (const auto& sc : scenarios)
      for (const auto& m : c.methods) tasks.push_back({seed, &sc, m});
  res.runs = parallel_map<MethodRun>(tasks.size(), c.jobs, [&](std::size_t t) {
    const Task& task = tasks[t];
    const NoisyScenario& sc = *task.scenario;
    NoisyBpParams q;
    q.m = c.m;
    q.n = c.n;
    q.k_nonzero = std::max<Index>(1, c.n / 80);
    q.matrix = sc.matrix;
    q.noise = sc.noise;
    q.noise_std = sc.noise_std;
    q.dictionary = sc.dictionary;
    auto inst = std::make_shared<ProblemInstance>(gen_bp_noisy(q, task.seed));
    BenchConfig cc = c;
    cc.sigma_exps = {sc.sigma_exp};
    GridSpec spec = make_spec(cc, task.method, inst, task.seed);
    spec.stop = StoppingRule::never();
    MethodRun r = run_grid(spec);
    r.scenario = sc.name;
    return r;
  });
  res.summary = summarize(c, res.runs);
  return res;
}

BenchResult cmd_rpca(const BenchConfig& config) {
  BenchConfig c = config;
  c.experiment = Experiment::Rpca;
  return cmd_compare(c);
}

BenchResult run_experiment(const BenchConfig& config) {
  switch (config.experiment) {
    case Experiment::BpNoisy:
      return cmd_noisy(config);
    case Experiment::Rpca:
      return cmd_rpca(config);
    default:
      return cmd_compare(config);
  }
}

void write_outputs(const BenchResult& result) {
  namespace fs = std::filesystem;
  const BenchConfig& c = result.config;
  if (c.out.empty()) return;
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create output directory '" + c.out + "': " + ec.message());
  auto write = [&](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write '" + path.string() + "'");
  };
  for (const auto& r : result.runs) write(fs::path(c.out) / csv_name(c, r), to_csv(r.report));
  write(fs::path(c.out) / "summary.json", result.summary);
}

}  // namespace coopd::bench
