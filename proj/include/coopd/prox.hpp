#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coopd/block_structure.hpp"
#include "coopd/types.hpp"

namespace coopd {

enum class SvdBackend { Exact, Randomized };

struct RandomizedSvdOptions {
  Index oversampling = 10;
  Index power_iterations = 2;
  Index min_rank = 10;  // floor on the adaptive target rank
  Index rank_margin = 5;
};

// Block function catalog. Vectors left empty mean "zero vector".

struct ZeroFn {};

/// scale * ||x - center||_1
struct L1Fn {
  double scale = 1.0;
  Vector center;
};

/// <cost, x> + indicator(x >= 0)
struct LinearNonnegFn {
  Vector cost;
};

/// indicator of the closed ball B(center, radius)
struct BallIndicatorFn {
  double radius = 1.0;
  Vector center;
};

/// scale * ||X||_* for X = reshape(block, rows, cols) in column-major order.
struct NuclearFn {
  double scale = 1.0;
  Index rows = 0;
  Index cols = 0;
  SvdBackend backend = SvdBackend::Exact;
  RandomizedSvdOptions randomized{};
};

using BlockFunction = std::variant<ZeroFn, L1Fn, LinearNonnegFn, BallIndicatorFn, NuclearFn>;

class SvdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mutable per-run state for the nuclear-norm prox: adaptive rank
/// estimates (randomized backend), the SVD counter and the seed stream.
struct ProxWorkspace {
  std::vector<Index> rank_hint;  // indexed by block
  std::uint64_t svd_count = 0;
  std::uint64_t seed = 0;
};

/// f(x); +infinity outside the domain.
double value(const BlockFunction& f, const ConstVecRef& x);

/// argmin_u f(u) + ||u - z||^2 / (2 step).
Vector prox(const BlockFunction& f, double step, const ConstVecRef& z,
            ProxWorkspace* workspace = nullptr, Index block = 0);

/// True for coordinatewise-separable members (Zero, L1, LinearNonneg).
bool is_elementwise(const BlockFunction& f);

std::string kind_name(const BlockFunction& f);

struct Svd {
  Matrix u;
  Vector s;  // descending
  Matrix v;
};

Svd exact_svd(const Matrix& z);

/// Rank-`target_rank` approximate SVD via a Gaussian range finder with
/// `power_iters` re-orthonormalized power iterations.
Svd randomized_svd(const Matrix& z, Index target_rank, Index oversampling, Index power_iters,
                   std::uint64_t seed);

struct SvtResult {
  Matrix x;
  Index rank = 0;  // singular values that survived the threshold
};

/// U max(S - threshold, 0) V^T, the prox of threshold * ||.||_*.
/// For the randomized backend, `rank_hint` is the previous survivor count.
SvtResult svt(const Matrix& z, double threshold, SvdBackend backend = SvdBackend::Exact,
              Index rank_hint = 0, std::uint64_t seed = 0,
              const RandomizedSvdOptions& options = {});

/// ||.||_inf distance from v to the subdifferential of scale * ||.||_1 at x.
double subdiff_dist_inf_l1(const ConstVecRef& x, const ConstVecRef& v, double scale);

/// g(x) = sum_i g_i(x_i) over a block partition of R^n.
class SeparableFunction {
 public:
  SeparableFunction(BlockStructure structure, std::vector<BlockFunction> blocks);

  /// One elementwise function over all of R^n, as a single block.
  static SeparableFunction uniform(Index n, BlockFunction f);

  const BlockStructure& structure() const noexcept { return structure_; }
  Index num_blocks() const noexcept { return structure_.num_blocks(); }
  Index dim() const noexcept { return structure_.cols(); }
  const BlockFunction& block(Index i) const { return blocks_.at(static_cast<std::size_t>(i)); }

  double value(const ConstVecRef& x) const;
  double value_block(Index i, const ConstVecRef& xi) const;
  Vector prox_block(Index i, double step, const ConstVecRef& z,
                    ProxWorkspace* workspace = nullptr) const;

  /// Same function over another partition. Elementwise blocks may be split
  /// and merged; other blocks must map onto an identical column range.
  SeparableFunction reblocked(const BlockStructure& target) const;

  /// Direct sum g(x) + h(w) over the concatenated coordinates.
  SeparableFunction direct_sum(const SeparableFunction& tail) const;

 private:
  BlockStructure structure_;
  std::vector<BlockFunction> blocks_;
};

}  // namespace coopd
