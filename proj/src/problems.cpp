#include "coopd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>
#include <json.hpp>

#include "coopd/operator_io.hpp"
#include "coopd/rng.hpp"

namespace coopd {
namespace {

// Sub-streams of a generator seed.
enum Stream : std::uint64_t { kMatrix = 0, kSupport = 1, kValues = 2, kNoise = 3, kRows = 4, kExtra = 5 };

SplitMix64 stream(std::uint64_t seed, Stream s) { return SplitMix64(derive_seed(seed, s)); }

RowMatrix gaussian_rows(Index m, Index n, SplitMix64& gen) {
  RowMatrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = gen.normal();
  return a;
}

Matrix gaussian(Index m, Index n, SplitMix64& gen) {
  Matrix a(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = gen.normal();
  return a;
}

std::string format_label(const std::string& name,
                         const std::vector<std::pair<std::string, double>>& params,
                         std::uint64_t seed) {
  std::ostringstream s;
  s << name;
  for (const auto& [k, v] : params) s << ' ' << k << '=' << v;
  s << " seed=" << seed;
  return s.str();
}

ProblemInstance package(OperatorPtr a, Vector b, SeparableFunction g, GroundTruth truth,
                        const std::string& name, std::vector<std::pair<std::string, double>> params,
                        std::uint64_t seed) {
  ProblemInstance p{std::move(a), std::move(b), std::move(g), std::move(truth), {}, std::move(params), seed};
  p.label = format_label(name, p.params, seed);
  p.validate();
  return p;
}

SeparableFunction l1_blocks(const BlockStructure& s, double scale = 1.0) {
  return SeparableFunction(BlockStructure(0, s.widths()),
                           std::vector<BlockFunction>(static_cast<std::size_t>(s.num_blocks()), L1Fn{scale, {}}));
}

Vector sparse_signal(Index n, Index k, Index head, SplitMix64& support, SplitMix64& values,
                     bool normal, double lo, double hi) {
  Vector x = Vector::Zero(n);
  for (auto j : sample_without_replacement(support, head, k)) {
    x[j] = normal ? values.normal() : values.uniform(lo, hi);
  }
  return x;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ------------------------------------------------------------ basis pursuit

ProblemInstance gen_bp_gaussian(Index m, Index n, double density, std::pair<double, double> range,
                                std::uint64_t seed, Index block_width) {
  require(m > 0 && n > 0 && m < n, "gen_bp_gaussian: need 0 < m < n");
  require(density > 0.0 && density < 1.0, "gen_bp_gaussian: density must lie in (0, 1)");
  require(range.first < range.second, "gen_bp_gaussian: empty amplitude range");
  auto gm = stream(seed, kMatrix);
  auto gs = stream(seed, kSupport);
  auto gv = stream(seed, kValues);
  RowMatrix a = gaussian_rows(m, n, gm);
  const auto k = static_cast<Index>(std::ceil(density * static_cast<double>(n)));
  Vector x = sparse_signal(n, k, n, gs, gv, false, range.first, range.second);
  Vector b = a * x;
  auto op = dense_operator(std::move(a), block_width);
  GroundTruth t;
  t.x = std::move(x);
  t.noise = Vector::Zero(m);
  auto g = l1_blocks(op->structure());
  return package(std::move(op), std::move(b), std::move(g), std::move(t), "bp1",
                 {{"m", double(m)}, {"n", double(n)}, {"density", density}, {"lo", range.first},
                  {"hi", range.second}, {"w", double(block_width)}},
                 seed);
}

ProblemInstance gen_bp_dct(Index m, Index n, Index k_nonzero, Index head, std::uint64_t seed,
                           Index block_width) {
  require(m > 0 && m <= n, "gen_bp_dct: need 0 < m <= n");
  require(k_nonzero >= 0 && k_nonzero <= head && head <= n, "gen_bp_dct: need k <= head <= n");
  auto gr = stream(seed, kRows);
  auto gs = stream(seed, kSupport);
  auto gv = stream(seed, kValues);
  std::vector<Index> rows;
  for (auto r : sample_without_replacement(gr, n, m)) rows.push_back(r);
  std::sort(rows.begin(), rows.end());
  auto op = sampled_transform(std::move(rows), n, block_width);
  Vector x = sparse_signal(n, k_nonzero, head, gs, gv, true, 0.0, 0.0);
  Vector b = op->apply(x);
  GroundTruth t;
  t.x = std::move(x);
  t.noise = Vector::Zero(m);
  auto g = l1_blocks(op->structure());
  return package(std::move(op), std::move(b), std::move(g), std::move(t), "bp2",
                 {{"m", double(m)}, {"n", double(n)}, {"k", double(k_nonzero)}, {"head", double(head)},
                  {"w", double(block_width)}},
                 seed);
}

ProblemInstance gen_bp_noisy(const NoisyBpParams& q, std::uint64_t seed) {
  require(q.m > 0 && q.n > 0 && q.m < q.n, "gen_bp_noisy: need 0 < m < n");
  require(q.k_nonzero >= 0 && q.k_nonzero <= q.n, "gen_bp_noisy: need 0 <= k <= n");
  require(q.noise_std >= 0.0, "gen_bp_noisy: noise_std must be >= 0");
  auto gm = stream(seed, kMatrix);
  auto gs = stream(seed, kSupport);
  auto gv = stream(seed, kValues);
  auto ge = stream(seed, kNoise);

  OperatorPtr op;
  if (q.matrix == NoisyMatrix::LowRank) {
    require(q.m % 2 == 0, "gen_bp_noisy: low-rank matrix needs even m");
    require(q.dictionary == Dictionary::None, "gen_bp_noisy: dictionary needs a Gaussian matrix");
    Matrix left = gaussian(q.m, q.m / 2, gm);
    Matrix right = gaussian(q.m / 2, q.n, gm);
    op = low_rank_product(std::move(left), std::move(right), q.block_width);
  } else if (q.dictionary == Dictionary::Dct) {
    const Matrix meas = gaussian(q.m, q.n, gm);
    // Phi maps coefficients to the signal; dct_matrix is the analysis transform.
    RowMatrix a = meas * dct_matrix(q.n).transpose();
    op = dense_operator(std::move(a), q.block_width);
  } else {
    op = dense_operator(gaussian_rows(q.m, q.n, gm), q.block_width);
  }

  const bool normal_values = q.dictionary == Dictionary::Dct;
  Vector x = sparse_signal(q.n, q.k_nonzero, q.n, gs, gv, normal_values, -10.0, 10.0);
  const Vector clean = op->apply(x);
  Vector b = clean;
  switch (q.noise) {
    case NoiseKind::Gaussian:
      for (Index i = 0; i < q.m; ++i) b[i] += q.noise_std * ge.normal();
      break;
    case NoiseKind::Rounding:
      b = clean.unaryExpr([](double v) { return std::round(v); });
      break;
    case NoiseKind::None:
      break;
  }
  GroundTruth t;
  t.noise = b - clean;
  t.x = std::move(x);
  auto g = l1_blocks(op->structure());
  return package(std::move(op), std::move(b), std::move(g), std::move(t), "bp-noisy",
                 {{"m", double(q.m)},
                  {"n", double(q.n)},
                  {"k", double(q.k_nonzero)},
                  {"lowrank", q.matrix == NoisyMatrix::LowRank ? 1.0 : 0.0},
                  {"noise", static_cast<double>(static_cast<int>(q.noise))},
                  {"noise_std", q.noise_std},
                  {"dct", q.dictionary == Dictionary::Dct ? 1.0 : 0.0},
                  {"w", double(q.block_width)}},
                 seed);
}

// ------------------------------------------------------------ RPCA

ProblemInstance gen_rpca(Index n1, Index n2, Index rank, double density, double magnitude,
                         std::uint64_t seed, std::optional<double> lambda, SvdBackend backend) {
  require(n1 > 0 && n2 > 0, "gen_rpca: empty matrix");
  require(rank >= 1 && rank <= std::min(n1, n2), "gen_rpca: need 1 <= r <= min(n1, n2)");
  require(density >= 0.0 && density <= 1.0, "gen_rpca: density must lie in [0, 1]");
  require(magnitude >= 0.0, "gen_rpca: magnitude must be >= 0");
  auto gm = stream(seed, kMatrix);
  auto gs = stream(seed, kSupport);
  auto gv = stream(seed, kValues);
  const Matrix q1 = gaussian(n1, rank, gm);
  const Matrix q2 = gaussian(rank, n2, gm);
  const Matrix l = q1 * q2;
  const Index nn = n1 * n2;
  const auto nnz = static_cast<Index>(std::llround(density * static_cast<double>(nn)));
  Vector s = Vector::Zero(nn);
  for (auto j : sample_without_replacement(gs, nn, nnz)) s[j] = gv.uniform(-magnitude, magnitude);

  const double lam = lambda.value_or(1.0 / std::sqrt(static_cast<double>(n1)));
  require(lam > 0.0, "gen_rpca: lambda must be positive");
  Vector x(2 * nn);
  x.head(nn) = Eigen::Map<const Vector>(l.data(), nn);
  x.tail(nn) = s;
  Vector b = x.head(nn) + s;

  auto op = hcat(identity_operator(nn, nn), 1.0, 0);
  SeparableFunction g(BlockStructure(0, {nn, nn}),
                      {NuclearFn{1.0, n1, n2, backend, {}}, L1Fn{lam, {}}});
  GroundTruth t;
  t.x = std::move(x);
  t.noise = Vector::Zero(nn);
  t.signal_offset = 0;
  t.signal_length = nn;
  return package(std::move(op), std::move(b), std::move(g), std::move(t), "rpca",
                 {{"n1", double(n1)}, {"n2", double(n2)}, {"r", double(rank)}, {"density", density},
                  {"magnitude", magnitude}, {"lambda", lam},
                  {"randomized", backend == SvdBackend::Randomized ? 1.0 : 0.0}},
                 seed);
}

// ------------------------------------------------------------ LP

std::optional<LpSolution> lp_vertex_oracle(const Matrix& a, const Vector& b, const Vector& c) {
  const Index m = a.rows();
  const Index n = a.cols();
  require(n <= kLpOracleMaxCols, "lp_vertex_oracle: too many columns for enumeration");
  require(m <= n && b.size() == m && c.size() == n, "lp_vertex_oracle: dimension mismatch");
  std::optional<LpSolution> best;
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  std::fill(mask.begin(), mask.begin() + m, true);
  do {
    std::vector<Index> basis;
    for (Index j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(j)]) basis.push_back(j);
    Matrix ab(m, m);
    for (Index t = 0; t < m; ++t) ab.col(t) = a.col(basis[static_cast<std::size_t>(t)]);
    Eigen::FullPivLU<Matrix> lu(ab);
    if (!lu.isInvertible()) continue;
    const Vector xb = lu.solve(b);
    if ((ab * xb - b).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>())) continue;
    if (xb.minCoeff() < -1e-12) continue;
    Vector x = Vector::Zero(n);
    Vector cb(m);
    for (Index t = 0; t < m; ++t) {
      x[basis[static_cast<std::size_t>(t)]] = std::max(0.0, xb[t]);
      cb[t] = c[basis[static_cast<std::size_t>(t)]];
    }
    const double val = c.dot(x);
    if (!best || val < best->value) {
      best = LpSolution{x, -Eigen::FullPivLU<Matrix>(ab.transpose()).solve(cb), val};
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

ProblemInstance gen_lp(Index m, Index n, std::uint64_t seed, bool zero_cost) {
  require(m > 0 && m < n, "gen_lp: need 0 < m < n");
  auto gm = stream(seed, kMatrix);
  auto gv = stream(seed, kValues);
  auto gc = stream(seed, kExtra);
  RowMatrix a = gaussian_rows(m, n, gm);
  Vector x0(n);
  for (Index j = 0; j < n; ++j) x0[j] = gv.uniform(0.5, 1.5);
  Vector b = a * x0;
  Vector c = Vector::Zero(n);
  if (!zero_cost) {
    Vector w(m);
    for (Index i = 0; i < m; ++i) w[i] = gc.normal();
    Vector s(n);
    for (Index j = 0; j < n; ++j) s[j] = gc.uniform(0.1, 1.1);
    c = s + a.transpose() * w;
  }
  GroundTruth t;
  if (n <= kLpOracleMaxCols) {
    if (auto sol = lp_vertex_oracle(Matrix(a), b, c)) {
      t.x_opt = sol->x;
      t.g_opt = sol->value;
      t.multiplier = sol->y;
    }
  }
  auto op = dense_operator(std::move(a), 1);
  SeparableFunction g = SeparableFunction::uniform(n, LinearNonnegFn{c}).reblocked(
      BlockStructure::uniform(0, n, 1));
  return package(std::move(op), std::move(b), std::move(g), std::move(t), "lp",
                 {{"m", double(m)}, {"n", double(n)}, {"zero_cost", zero_cost ? 1.0 : 0.0}}, seed);
}

// ------------------------------------------------------------ consensus

std::vector<Edge> ring_edges(Index p) {
  require(p >= 2, "ring_edges: need p >= 2");
  std::vector<Edge> e;
  for (Index i = 0; i + 1 < p; ++i) e.emplace_back(i, i + 1);
  if (p > 2) e.emplace_back(p - 1, 0);
  return e;
}

std::vector<Edge> path_edges(Index p) {
  require(p >= 1, "path_edges: need p >= 1");
  std::vector<Edge> e;
  for (Index i = 0; i + 1 < p; ++i) e.emplace_back(i, i + 1);
  return e;
}

bool is_connected(Index p, const std::vector<Edge>& edges) {
  if (p <= 0) return false;
  std::vector<Index> parent(static_cast<std::size_t>(p));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      auto& pv = parent[static_cast<std::size_t>(v)];
      pv = parent[static_cast<std::size_t>(pv)];
      v = pv;
    }
    return v;
  };
  Index components = p;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= p || v >= p) return false;
    const Index ru = find(u);
    const Index rv = find(v);
    if (ru != rv) {
      parent[static_cast<std::size_t>(ru)] = rv;
      --components;
    }
  }
  return components == 1;
}

std::pair<double, double> median_interval(Vector a) {
  require(a.size() > 0, "median_interval: empty data");
  std::sort(a.begin(), a.end());
  const Index p = a.size();
  return p % 2 == 1 ? std::pair{a[p / 2], a[p / 2]} : std::pair{a[p / 2 - 1], a[p / 2]};
}

ProblemInstance gen_consensus(Index p, const std::vector<Edge>& edges, Vector a, std::uint64_t seed) {
  require(p >= 1, "gen_consensus: need p >= 1");
  if (a.size() == 0) {
    auto gv = stream(seed, kValues);
    a.resize(p);
    for (Index i = 0; i < p; ++i) a[i] = gv.uniform(-10.0, 10.0);
  }
  require(a.size() == p, "gen_consensus: one datum per node required");
  require(!edges.empty() || p == 1, "gen_consensus: graph has no edges");
  if (!is_connected(p, edges)) throw std::invalid_argument("gen_consensus: graph is disconnected");
  for (auto [u, v] : edges) require(u != v, "gen_consensus: self-loop");

  const auto m = static_cast<Index>(edges.size());
  std::vector<Eigen::Triplet<double, std::int64_t>> trip;
  for (Index r = 0; r < m; ++r) {
    trip.emplace_back(r, edges[static_cast<std::size_t>(r)].first, 1.0);
    trip.emplace_back(r, edges[static_cast<std::size_t>(r)].second, -1.0);
  }
  SparseMatrix inc(m, p);
  inc.setFromTriplets(trip.begin(), trip.end());
  inc.makeCompressed();
  auto op = std::make_shared<SparseColumnOperator>(std::move(inc), BlockStructure::uniform(m, p, 1));

  std::vector<BlockFunction> blocks;
  for (Index i = 0; i < p; ++i) blocks.emplace_back(L1Fn{1.0, Vector::Constant(1, a[i])});
  SeparableFunction g(BlockStructure::uniform(0, p, 1), std::move(blocks));

  GroundTruth t;
  const auto iv = median_interval(a);
  t.consensus_interval = iv;
  if (iv.first == iv.second) t.x = Vector::Constant(p, iv.first);
  t.x_opt = Vector::Constant(p, iv.first);
  t.g_opt = (a.array() - iv.first).abs().sum();
  return package(std::move(op), Vector::Zero(m), std::move(g), std::move(t), "consensus",
                 {{"p", double(p)}, {"edges", double(m)}}, seed);
}

// ------------------------------------------------------------ composite

ProblemInstance gen_composite(OperatorPtr k, BlockFunction f_block, BlockFunction r_block, Vector b) {
  require(k != nullptr, "gen_composite: missing K");
  const Index m = k->rows();
  if (b.size() == 0) b = Vector::Zero(m);
  require(b.size() == m, "gen_composite: b has wrong length");
  const BlockStructure ks(0, k->structure().widths());
  SeparableFunction head = SeparableFunction::uniform(k->cols(), std::move(r_block)).reblocked(ks);
  SeparableFunction tail = SeparableFunction::uniform(m, std::move(f_block));
  auto op = hcat(k, -1.0, 0);
  return package(std::move(op), std::move(b), head.direct_sum(tail), {}, "composite",
                 {{"m", double(m)}, {"n", double(k->cols())}}, 0);
}

// ------------------------------------------------------------ export

void export_instance(const ProblemInstance& p, const std::string& stem) {
  using nlohmann::json;
  const std::string a_stem = stem + ".A";
  const std::string format = io::write_operator(a_stem, *p.a);
  io::write_vector(stem + ".b", p.b);
  json files = {{"operator", a_stem}, {"operator_format", format}, {"b", stem + ".b"}};
  auto put = [&](const char* key, const std::optional<Vector>& v) {
    if (!v) return;
    const std::string path = stem + "." + key;
    io::write_vector(path, *v);
    files[key] = path;
  };
  put("x_true", p.truth.x);
  put("noise", p.truth.noise);
  put("x_opt", p.truth.x_opt);
  put("multiplier", p.truth.multiplier);

  json params = json::object();
  for (const auto& [k, v] : p.params) params[k] = v;
  json side = {{"label", p.label},
               {"seed", p.seed},
               {"rows", p.rows()},
               {"cols", p.cols()},
               {"block_widths", p.a->structure().widths()},
               {"params", params},
               {"files", files}};
  for (Index i = 0; i < p.g.num_blocks(); ++i) side["g"].push_back(kind_name(p.g.block(i)));
  if (p.truth.g_opt) side["g_opt"] = *p.truth.g_opt;
  if (p.truth.consensus_interval) {
    side["consensus_interval"] = {p.truth.consensus_interval->first, p.truth.consensus_interval->second};
  }
  std::ofstream out(stem + ".json");
  if (!out) throw std::runtime_error("export_instance: cannot write " + stem + ".json");
  out << side.dump(2) << '\n';
  if (!out) throw std::runtime_error("export_instance: write failed for " + stem + ".json");
}

}  // namespace coopd
