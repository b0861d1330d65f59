#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "coopd/block_structure.hpp"
#include "coopd/types.hpp"

namespace coopd {

/// Power-iteration settings for spectral norms.
struct PowerIterationOptions {
  double tolerance = 1e-8;  // relative change of the Rayleigh quotient
  int max_iterations = 5000;
};

/// lambda_i = lambda_max(A_i^T A_i), one entry per block.
struct BlockNorms {
  std::vector<double> lambda;
  double tolerance = 1e-8;
};

/// A linear map R^n -> R^m with a column-block partition A = [A_1, ..., A_p].
///
/// Implementations provide two column-range kernels; every block and
/// full-operator product is expressed through them. Instances are immutable
/// after construction and safe for concurrent read-only use.
class BlockOperator {
 public:
  explicit BlockOperator(BlockStructure structure);
  virtual ~BlockOperator() = default;

  BlockOperator(const BlockOperator&) = delete;
  BlockOperator& operator=(const BlockOperator&) = delete;

  const BlockStructure& structure() const noexcept { return structure_; }
  Index rows() const noexcept { return structure_.rows(); }
  Index cols() const noexcept { return structure_.cols(); }
  Index num_blocks() const noexcept { return structure_.num_blocks(); }

  // Checked, allocating interface.
  Vector apply(const ConstVecRef& x) const;
  Vector adjoint_apply(const ConstVecRef& y) const;
  Vector apply_block(Index i, const ConstVecRef& v) const;
  Vector adjoint_apply_block(Index i, const ConstVecRef& y) const;

  // Unchecked hot-path interface used by the solvers.
  /// out += alpha * A_i v
  void add_block_image(Index i, const ConstVecRef& v, double alpha, VecRef out) const {
    add_columns_image(structure_.offset(i), structure_.width(i), v, alpha, out);
  }
  /// out = A_i^T y
  void block_adjoint_into(Index i, const ConstVecRef& y, VecRef out) const {
    columns_adjoint(structure_.offset(i), structure_.width(i), y, out);
  }
  /// out = A x
  virtual void apply_into(const ConstVecRef& x, VecRef out) const;
  /// out = A^T y
  virtual void adjoint_into(const ConstVecRef& y, VecRef out) const;

  /// lambda_max(A_i^T A_i). Exact for width-1 blocks and for blocks whose
  /// norm is known structurally; power iteration otherwise.
  double block_sq_norm(Index i, const PowerIterationOptions& opts = {}) const;

  Matrix to_dense() const;

  /// out += alpha * A[:, col0 : col0 + width] v
  virtual void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                                 VecRef out) const = 0;
  /// out = A[:, col0 : col0 + width]^T y
  virtual void columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                               VecRef out) const = 0;
  /// Structurally known lambda_max for a column range, if any.
  virtual std::optional<double> exact_columns_sq_norm(Index /*col0*/, Index /*width*/) const {
    return std::nullopt;
  }

 protected:
  void check_columns(Index col0, Index width) const;

 private:
  BlockStructure structure_;
};

using OperatorPtr = std::shared_ptr<const BlockOperator>;

/// Row-major dense storage.
class DenseOperator final : public BlockOperator {
 public:
  DenseOperator(RowMatrix a, BlockStructure structure);

  const RowMatrix& matrix() const noexcept { return a_; }

  void apply_into(const ConstVecRef& x, VecRef out) const override;
  void adjoint_into(const ConstVecRef& y, VecRef out) const override;
  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override;
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override;

 private:
  RowMatrix a_;
};

/// Compressed sparse column storage (per-column row indices and values).
class SparseColumnOperator final : public BlockOperator {
 public:
  SparseColumnOperator(SparseMatrix a, BlockStructure structure);

  const SparseMatrix& matrix() const noexcept { return a_; }

  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override;
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override;

 private:
  SparseMatrix a_;
};

class IdentityOperator final : public BlockOperator {
 public:
  explicit IdentityOperator(BlockStructure structure);

  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override;
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override;
  std::optional<double> exact_columns_sq_norm(Index, Index) const override { return 1.0; }
};

/// [K | sign * I]; the identity tail has its own block partition.
class HCatOperator final : public BlockOperator {
 public:
  HCatOperator(OperatorPtr k, double sign, const BlockStructure& tail);

  const BlockOperator& left() const noexcept { return *k_; }
  double sign() const noexcept { return sign_; }

  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override;
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override;
  std::optional<double> exact_columns_sq_norm(Index col0, Index width) const override;

 private:
  OperatorPtr k_;
  double sign_;
};

/// Rows `rows` of the orthonormal DCT-II matrix of size n,
///   Phi[k, j] = c(k) cos(pi (2j + 1) k / (2n)),  c(0) = sqrt(1/n), c(k) = sqrt(2/n),
/// evaluated on the fly.
class SampledDctOperator final : public BlockOperator {
 public:
  SampledDctOperator(std::vector<Index> rows, Index n, BlockStructure structure);

  double entry(Index r, Index j) const;
  const std::vector<Index>& sampled_rows() const noexcept { return rows_; }

  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override;
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override;

 private:
  std::vector<Index> rows_;
  Index n_;
  std::vector<double> cos_table_;  // cos(pi * phase / (2n)), phase in [0, 4n)
  std::vector<double> row_scale_;
};

/// L * R kept in factored form.
class LowRankProductOperator final : public BlockOperator {
 public:
  LowRankProductOperator(Matrix left, Matrix right, BlockStructure structure);

  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override;
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override;

 private:
  Matrix left_;
  Matrix right_;
};

/// Same linear map as `base`, different block partition.
class ReblockedOperator final : public BlockOperator {
 public:
  ReblockedOperator(OperatorPtr base, BlockStructure structure);

  const OperatorPtr& base() const noexcept { return base_; }

  void apply_into(const ConstVecRef& x, VecRef out) const override { base_->apply_into(x, out); }
  void adjoint_into(const ConstVecRef& y, VecRef out) const override { base_->adjoint_into(y, out); }
  void add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                         VecRef out) const override {
    base_->add_columns_image(col0, width, v, alpha, out);
  }
  void columns_adjoint(Index col0, Index width, const ConstVecRef& y, VecRef out) const override {
    base_->columns_adjoint(col0, width, y, out);
  }
  std::optional<double> exact_columns_sq_norm(Index col0, Index width) const override {
    return base_->exact_columns_sq_norm(col0, width);
  }

 private:
  OperatorPtr base_;
};

// Factories.
OperatorPtr dense_operator(RowMatrix a, Index block_width = 1);
OperatorPtr identity_operator(Index n, Index block_width = 1);
/// [K | sign * I] with the tail split into blocks of `tail_width`
/// (0 means a single tail block).
OperatorPtr hcat(OperatorPtr k, double sign, Index tail_width = 0);
OperatorPtr sampled_transform(std::vector<Index> rows, Index n, Index block_width = 1);
OperatorPtr low_rank_product(Matrix left, Matrix right, Index block_width = 1);
OperatorPtr with_blocks(const OperatorPtr& base, BlockStructure structure);

/// Explicit orthonormal DCT-II matrix (n x n), for dictionaries and checks.
Matrix dct_matrix(Index n);

BlockNorms compute_block_norms(const BlockOperator& a, const PowerIterationOptions& opts = {});

/// lambda_max(A^T A) = ||A||^2 by power iteration.
double full_sq_norm(const BlockOperator& a, const PowerIterationOptions& opts = {});

}  // namespace coopd
