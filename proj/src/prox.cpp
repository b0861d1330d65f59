#include "coopd/prox.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "coopd/rng.hpp"

namespace coopd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Parameter vector restricted to [offset, offset + len); empty means zero.
Vector param_slice(const Vector& v, Index offset, Index len) {
  if (v.size() == 0) return Vector::Zero(len);
  return v.segment(offset, len);
}

void check_param(const Vector& v, Index n, const char* what) {
  if (v.size() != 0 && v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": parameter length does not match block");
  }
}

Matrix orthonormal_basis(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

Matrix shrink_reconstruct(const Svd& svd, double threshold, Index& rank) {
  rank = 0;
  while (rank < svd.s.size() && svd.s[rank] > threshold) ++rank;
  if (rank == 0) return Matrix::Zero(svd.u.rows(), svd.v.rows());
  const Vector shrunk = svd.s.head(rank).array() - threshold;
  return svd.u.leftCols(rank) * shrunk.asDiagonal() * svd.v.leftCols(rank).transpose();
}

double nuclear_norm(const Matrix& x) {
  Eigen::BDCSVD<Matrix> svd(x);
  if (svd.info() != Eigen::Success) throw SvdError("singular values did not converge");
  return svd.singularValues().sum();
}

}  // namespace

double value(const BlockFunction& f, const ConstVecRef& x) {
  return std::visit(
      Overloaded{
          [&](const ZeroFn&) { return 0.0; },
          [&](const L1Fn& g) {
            check_param(g.center, x.size(), "L1");
            if (g.center.size() == 0) return g.scale * x.lpNorm<1>();
            return g.scale * (x - g.center).lpNorm<1>();
          },
          [&](const LinearNonnegFn& g) {
            check_param(g.cost, x.size(), "LinearNonneg");
            if ((x.array() < 0.0).any()) return kInf;
            return g.cost.size() == 0 ? 0.0 : g.cost.dot(x);
          },
          [&](const BallIndicatorFn& g) {
            check_param(g.center, x.size(), "BallIndicator");
            const double dist = g.center.size() == 0 ? x.norm() : (x - g.center).norm();
            return dist <= g.radius * (1.0 + 1e-12) ? 0.0 : kInf;
          },
          [&](const NuclearFn& g) {
            if (g.rows * g.cols != x.size()) {
              throw std::invalid_argument("Nuclear: block size does not match rows*cols");
            }
            return g.scale * nuclear_norm(Eigen::Map<const Matrix>(x.data(), g.rows, g.cols));
          },
      },
      f);
}

Vector prox(const BlockFunction& f, double step, const ConstVecRef& z, ProxWorkspace* workspace,
            Index block) {
  if (!(step > 0.0)) throw std::invalid_argument("prox: step must be positive");
  if (!z.allFinite()) throw std::invalid_argument("prox: non-finite input");
  return std::visit(
      Overloaded{
          [&](const ZeroFn&) -> Vector { return z; },
          [&](const L1Fn& g) -> Vector {
            check_param(g.center, z.size(), "L1");
            const double t = step * g.scale;
            const Vector c = param_slice(g.center, 0, z.size());
            const Vector u = z - c;
            return c.array() + u.array().sign() * (u.array().abs() - t).max(0.0);
          },
          [&](const LinearNonnegFn& g) -> Vector {
            check_param(g.cost, z.size(), "LinearNonneg");
            if (g.cost.size() == 0) return z.cwiseMax(0.0);
            return (z - step * g.cost).cwiseMax(0.0);
          },
          [&](const BallIndicatorFn& g) -> Vector {
            check_param(g.center, z.size(), "BallIndicator");
            const Vector c = param_slice(g.center, 0, z.size());
            const Vector d = z - c;
            const double dist = d.norm();
            if (dist <= g.radius) return z;
            return c + (g.radius / dist) * d;
          },
          [&](const NuclearFn& g) -> Vector {
            if (g.rows * g.cols != z.size()) {
              throw std::invalid_argument("Nuclear: block size does not match rows*cols");
            }
            Index hint = 0;
            std::uint64_t seed = 0;
            if (workspace != nullptr) {
              if (workspace->rank_hint.size() <= static_cast<std::size_t>(block)) {
                workspace->rank_hint.resize(static_cast<std::size_t>(block) + 1, 0);
              }
              hint = workspace->rank_hint[static_cast<std::size_t>(block)];
              seed = derive_seed(workspace->seed, workspace->svd_count);
              ++workspace->svd_count;
            }
            const Matrix zm = Eigen::Map<const Matrix>(z.data(), g.rows, g.cols);
            SvtResult r = svt(zm, step * g.scale, g.backend, hint, seed, g.randomized);
            if (workspace != nullptr) workspace->rank_hint[static_cast<std::size_t>(block)] = r.rank;
            return Eigen::Map<const Vector>(r.x.data(), r.x.size());
          },
      },
      f);
}

bool is_elementwise(const BlockFunction& f) {
  return std::holds_alternative<ZeroFn>(f) || std::holds_alternative<L1Fn>(f) ||
         std::holds_alternative<LinearNonnegFn>(f);
}

std::string kind_name(const BlockFunction& f) {
  return std::visit(Overloaded{
                        [](const ZeroFn&) { return std::string("zero"); },
                        [](const L1Fn&) { return std::string("l1"); },
                        [](const LinearNonnegFn&) { return std::string("linear_nonneg"); },
                        [](const BallIndicatorFn&) { return std::string("ball_indicator"); },
                        [](const NuclearFn&) { return std::string("nuclear"); },
                    },
                    f);
}

Svd exact_svd(const Matrix& z) {
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw SvdError("exact SVD of a " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
                   " matrix did not converge");
  }
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Svd randomized_svd(const Matrix& z, Index target_rank, Index oversampling, Index power_iters,
                   std::uint64_t seed) {
  if (target_rank < 1) throw std::invalid_argument("randomized_svd: target_rank must be >= 1");
  if (oversampling < 0 || power_iters < 0) {
    throw std::invalid_argument("randomized_svd: negative oversampling or power iterations");
  }
  const Index sketch = target_rank + oversampling;
  if (sketch > std::min(z.rows(), z.cols())) {
    throw std::invalid_argument("randomized_svd: target_rank + oversampling exceeds min(rows, cols)");
  }
  SplitMix64 gen(seed);
  Matrix omega(z.cols(), sketch);
  for (Index j = 0; j < sketch; ++j)
    for (Index i = 0; i < z.cols(); ++i) omega(i, j) = gen.normal();

  Matrix q = orthonormal_basis(z * omega);
  for (Index it = 0; it < power_iters; ++it) {
    const Matrix w = orthonormal_basis(z.transpose() * q);
    q = orthonormal_basis(z * w);
  }
  const Matrix b = q.transpose() * z;
  Eigen::BDCSVD<Matrix> small(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (small.info() != Eigen::Success) {
    throw SvdError("randomized SVD: projected " + std::to_string(b.rows()) + "x" +
                   std::to_string(b.cols()) + " SVD did not converge");
  }
  Svd out;
  out.u = q * small.matrixU().leftCols(target_rank);
  out.s = small.singularValues().head(target_rank);
  out.v = small.matrixV().leftCols(target_rank);
  return out;
}

SvtResult svt(const Matrix& z, double threshold, SvdBackend backend, Index rank_hint,
              std::uint64_t seed, const RandomizedSvdOptions& options) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("svt: threshold must be nonnegative");
  SvtResult result;
  const Index min_dim = std::min(z.rows(), z.cols());
  if (min_dim == 0) {
    result.x = z;
    return result;
  }
  Index target = std::max(rank_hint + options.rank_margin, options.min_rank);
  if (backend == SvdBackend::Exact || target >= min_dim) {
    result.x = shrink_reconstruct(exact_svd(z), threshold, result.rank);
    return result;
  }
  const Index over = std::min(options.oversampling, min_dim - target);
  const Svd approx = randomized_svd(z, target, over, options.power_iterations, seed);
  result.x = shrink_reconstruct(approx, threshold, result.rank);
  return result;
}

double subdiff_dist_inf_l1(const ConstVecRef& x, const ConstVecRef& v, double scale) {
  if (x.size() != v.size()) throw std::invalid_argument("subdiff_dist_inf_l1: dimension mismatch");
  double worst = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double d = x[j] > 0.0   ? std::abs(v[j] - scale)
                     : x[j] < 0.0 ? std::abs(v[j] + scale)
                                  : std::max(std::abs(v[j]) - scale, 0.0);
    worst = std::max(worst, d);
  }
  return worst;
}

// ---------------------------------------------------------------- separable

SeparableFunction::SeparableFunction(BlockStructure structure, std::vector<BlockFunction> blocks)
    : structure_(std::move(structure)), blocks_(std::move(blocks)) {
  if (static_cast<Index>(blocks_.size()) != structure_.num_blocks()) {
    throw std::invalid_argument("SeparableFunction: one function per block required");
  }
  for (Index i = 0; i < structure_.num_blocks(); ++i) {
    const Index w = structure_.width(i);
    std::visit(Overloaded{
                   [](const ZeroFn&) {},
                   [&](const L1Fn& g) {
                     check_param(g.center, w, "L1");
                     if (!(g.scale >= 0.0)) throw std::invalid_argument("L1: scale must be >= 0");
                   },
                   [&](const LinearNonnegFn& g) { check_param(g.cost, w, "LinearNonneg"); },
                   [&](const BallIndicatorFn& g) {
                     check_param(g.center, w, "BallIndicator");
                     if (!(g.radius > 0.0)) throw std::invalid_argument("BallIndicator: radius must be > 0");
                   },
                   [&](const NuclearFn& g) {
                     if (g.rows * g.cols != w) {
                       throw std::invalid_argument("Nuclear: block width must equal rows*cols");
                     }
                     if (!(g.scale >= 0.0)) throw std::invalid_argument("Nuclear: scale must be >= 0");
                   },
               },
               blocks_[static_cast<std::size_t>(i)]);
  }
}

SeparableFunction SeparableFunction::uniform(Index n, BlockFunction f) {
  return SeparableFunction(BlockStructure::single(0, n), {std::move(f)});
}

double SeparableFunction::value(const ConstVecRef& x) const {
  if (x.size() != dim()) throw std::invalid_argument("SeparableFunction::value: dimension mismatch");
  double total = 0.0;
  for (Index i = 0; i < num_blocks(); ++i) {
    total += coopd::value(blocks_[static_cast<std::size_t>(i)],
                          x.segment(structure_.offset(i), structure_.width(i)));
  }
  return total;
}

double SeparableFunction::value_block(Index i, const ConstVecRef& xi) const {
  structure_.check_block(i);
  return coopd::value(blocks_[static_cast<std::size_t>(i)], xi);
}

Vector SeparableFunction::prox_block(Index i, double step, const ConstVecRef& z,
                                     ProxWorkspace* workspace) const {
  structure_.check_block(i);
  if (z.size() != structure_.width(i)) {
    throw std::invalid_argument("SeparableFunction::prox_block: dimension mismatch");
  }
  return prox(blocks_[static_cast<std::size_t>(i)], step, z, workspace, i);
}

SeparableFunction SeparableFunction::reblocked(const BlockStructure& target) const {
  if (target.cols() != dim()) throw std::invalid_argument("reblocked: dimension mismatch");
  std::vector<BlockFunction> out;
  out.reserve(static_cast<std::size_t>(target.num_blocks()));
  for (Index t = 0; t < target.num_blocks(); ++t) {
    const Index a = target.offset(t);
    const Index len = target.width(t);
    const Index first = structure_.block_of(a);
    const Index last = structure_.block_of(a + len - 1);
    const BlockFunction& head = blocks_[static_cast<std::size_t>(first)];
    if (first == last && structure_.offset(first) == a && structure_.width(first) == len) {
      out.push_back(head);
      continue;
    }
    // Gather parameter slices from every overlapped source block.
    Vector params = Vector::Zero(len);
    double scale = 0.0;
    for (Index s = first; s <= last; ++s) {
      const BlockFunction& src = blocks_[static_cast<std::size_t>(s)];
      if (!is_elementwise(src) || src.index() != head.index()) {
        throw std::invalid_argument("reblocked: block " + std::to_string(t) +
                                    " splits or merges non-elementwise functions (" +
                                    kind_name(src) + ")");
      }
      const Index lo = std::max(a, structure_.offset(s));
      const Index hi = std::min(a + len, structure_.offset(s) + structure_.width(s));
      const Index local = lo - structure_.offset(s);
      if (const auto* l1 = std::get_if<L1Fn>(&src)) {
        if (s != first && l1->scale != scale) {
          throw std::invalid_argument("reblocked: merged L1 blocks have different scales");
        }
        scale = l1->scale;
        params.segment(lo - a, hi - lo) = param_slice(l1->center, local, hi - lo);
      } else if (const auto* lin = std::get_if<LinearNonnegFn>(&src)) {
        params.segment(lo - a, hi - lo) = param_slice(lin->cost, local, hi - lo);
      }
    }
    if (std::holds_alternative<ZeroFn>(head)) {
      out.emplace_back(ZeroFn{});
    } else if (std::holds_alternative<L1Fn>(head)) {
      const bool centered = std::get<L1Fn>(head).center.size() != 0 || !params.isZero(0.0);
      out.emplace_back(L1Fn{scale, centered ? params : Vector()});
    } else {
      out.emplace_back(LinearNonnegFn{params});
    }
  }
  return SeparableFunction(BlockStructure(0, target.widths()), std::move(out));
}

SeparableFunction SeparableFunction::direct_sum(const SeparableFunction& tail) const {
  std::vector<Index> widths = structure_.widths();
  widths.insert(widths.end(), tail.structure_.widths().begin(), tail.structure_.widths().end());
  std::vector<BlockFunction> blocks = blocks_;
  blocks.insert(blocks.end(), tail.blocks_.begin(), tail.blocks_.end());
  return SeparableFunction(BlockStructure(0, std::move(widths)), std::move(blocks));
}

}  // namespace coopd
