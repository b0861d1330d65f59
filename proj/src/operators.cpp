#include "coopd/operators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "coopd/rng.hpp"

namespace coopd {
namespace {

void check_size(Index got, Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(got) + ", expected " + std::to_string(want) + ")");
  }
}

// Rayleigh-quotient power iteration for the largest eigenvalue of a PSD
// operator given as gram(v, out): out = G v.
template <class Gram>
double power_iteration(Index dim, std::uint64_t seed, const PowerIterationOptions& opts,
                       Gram&& gram) {
  SplitMix64 gen(seed);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = gen.normal();
  v.normalize();
  Vector w(dim);
  double lambda = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    gram(v, w);
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    if (it > 0 && std::abs(next - lambda) <= opts.tolerance * std::abs(next)) return next;
    lambda = next;
    v = w / wn;
  }
  return lambda;
}

std::uint64_t range_seed(Index col0, Index width) {
  return derive_seed(static_cast<std::uint64_t>(col0), static_cast<std::uint64_t>(width));
}

}  // namespace

BlockOperator::BlockOperator(BlockStructure structure) : structure_(std::move(structure)) {}

void BlockOperator::check_columns(Index col0, Index width) const {
  if (col0 < 0 || width < 0 || col0 + width > cols()) {
    throw std::out_of_range("column range out of bounds");
  }
}

Vector BlockOperator::apply(const ConstVecRef& x) const {
  check_size(x.size(), cols(), "apply");
  Vector out(rows());
  apply_into(x, out);
  return out;
}

Vector BlockOperator::adjoint_apply(const ConstVecRef& y) const {
  check_size(y.size(), rows(), "adjoint_apply");
  Vector out(cols());
  adjoint_into(y, out);
  return out;
}

Vector BlockOperator::apply_block(Index i, const ConstVecRef& v) const {
  structure_.check_block(i);
  check_size(v.size(), structure_.width(i), "apply_block");
  Vector out = Vector::Zero(rows());
  add_block_image(i, v, 1.0, out);
  return out;
}

Vector BlockOperator::adjoint_apply_block(Index i, const ConstVecRef& y) const {
  structure_.check_block(i);
  check_size(y.size(), rows(), "adjoint_apply_block");
  Vector out(structure_.width(i));
  block_adjoint_into(i, y, out);
  return out;
}

void BlockOperator::apply_into(const ConstVecRef& x, VecRef out) const {
  out.setZero();
  add_columns_image(0, cols(), x, 1.0, out);
}

void BlockOperator::adjoint_into(const ConstVecRef& y, VecRef out) const {
  columns_adjoint(0, cols(), y, out);
}

double BlockOperator::block_sq_norm(Index i, const PowerIterationOptions& opts) const {
  structure_.check_block(i);
  const Index col0 = structure_.offset(i);
  const Index width = structure_.width(i);
  if (auto exact = exact_columns_sq_norm(col0, width)) return *exact;
  if (width == 1) {
    Vector column = Vector::Zero(rows());
    add_columns_image(col0, 1, Vector::Ones(1), 1.0, column);
    return column.squaredNorm();
  }
  Vector image(rows());
  return power_iteration(width, range_seed(col0, width), opts,
                         [&](const Vector& v, Vector& out) {
                           image.setZero();
                           add_columns_image(col0, width, v, 1.0, image);
                           columns_adjoint(col0, width, image, out);
                         });
}

Matrix BlockOperator::to_dense() const {
  Matrix dense = Matrix::Zero(rows(), cols());
  Vector unit = Vector::Ones(1);
  for (Index j = 0; j < cols(); ++j) {
    Vector column = Vector::Zero(rows());
    add_columns_image(j, 1, unit, 1.0, column);
    dense.col(j) = column;
  }
  return dense;
}

// ---------------------------------------------------------------- dense

DenseOperator::DenseOperator(RowMatrix a, BlockStructure structure)
    : BlockOperator(std::move(structure)), a_(std::move(a)) {
  check_size(a_.rows(), rows(), "DenseOperator rows");
  check_size(a_.cols(), cols(), "DenseOperator cols");
}

void DenseOperator::apply_into(const ConstVecRef& x, VecRef out) const { out.noalias() = a_ * x; }

void DenseOperator::adjoint_into(const ConstVecRef& y, VecRef out) const {
  out.noalias() = a_.transpose() * y;
}

void DenseOperator::add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                                      VecRef out) const {
  if (width == 1) {
    out += (alpha * v[0]) * a_.col(col0);
  } else {
    out.noalias() += alpha * (a_.middleCols(col0, width) * v);
  }
}

void DenseOperator::columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                                    VecRef out) const {
  if (width == 1) {
    out[0] = a_.col(col0).dot(y);
  } else {
    out.noalias() = a_.middleCols(col0, width).transpose() * y;
  }
}

// ---------------------------------------------------------------- sparse

SparseColumnOperator::SparseColumnOperator(SparseMatrix a, BlockStructure structure)
    : BlockOperator(std::move(structure)), a_(std::move(a)) {
  check_size(a_.rows(), rows(), "SparseColumnOperator rows");
  check_size(a_.cols(), cols(), "SparseColumnOperator cols");
  a_.makeCompressed();
}

void SparseColumnOperator::add_columns_image(Index col0, Index width, const ConstVecRef& v,
                                             double alpha, VecRef out) const {
  for (Index j = 0; j < width; ++j) {
    const double scale = alpha * v[j];
    if (scale == 0.0) continue;
    for (SparseMatrix::InnerIterator it(a_, col0 + j); it; ++it) {
      out[it.row()] += scale * it.value();
    }
  }
}

void SparseColumnOperator::columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                                           VecRef out) const {
  for (Index j = 0; j < width; ++j) {
    double acc = 0.0;
    for (SparseMatrix::InnerIterator it(a_, col0 + j); it; ++it) acc += it.value() * y[it.row()];
    out[j] = acc;
  }
}

// ---------------------------------------------------------------- identity

IdentityOperator::IdentityOperator(BlockStructure structure)
    : BlockOperator(std::move(structure)) {
  check_size(rows(), cols(), "IdentityOperator must be square");
}

void IdentityOperator::add_columns_image(Index col0, Index width, const ConstVecRef& v,
                                         double alpha, VecRef out) const {
  out.segment(col0, width) += alpha * v;
}

void IdentityOperator::columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                                       VecRef out) const {
  out = y.segment(col0, width);
}

// ---------------------------------------------------------------- hcat

HCatOperator::HCatOperator(OperatorPtr k, double sign, const BlockStructure& tail)
    : BlockOperator(k->structure().concat(tail)), k_(std::move(k)), sign_(sign) {
  if (sign_ != 1.0 && sign_ != -1.0) throw std::invalid_argument("hcat: sign must be +1 or -1");
  check_size(tail.cols(), k_->rows(), "hcat identity tail");
}

void HCatOperator::add_columns_image(Index col0, Index width, const ConstVecRef& v, double alpha,
                                     VecRef out) const {
  const Index nk = k_->cols();
  const Index end = col0 + width;
  if (col0 < nk) {
    const Index wk = std::min(end, nk) - col0;
    k_->add_columns_image(col0, wk, v.head(wk), alpha, out);
  }
  if (end > nk) {
    const Index start = std::max(col0, nk);
    const Index wt = end - start;
    out.segment(start - nk, wt) += (alpha * sign_) * v.tail(wt);
  }
}

void HCatOperator::columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                                   VecRef out) const {
  const Index nk = k_->cols();
  const Index end = col0 + width;
  if (col0 < nk) {
    const Index wk = std::min(end, nk) - col0;
    k_->columns_adjoint(col0, wk, y, out.head(wk));
  }
  if (end > nk) {
    const Index start = std::max(col0, nk);
    const Index wt = end - start;
    out.tail(wt) = sign_ * y.segment(start - nk, wt);
  }
}

std::optional<double> HCatOperator::exact_columns_sq_norm(Index col0, Index width) const {
  const Index nk = k_->cols();
  if (col0 >= nk) return 1.0;
  if (col0 + width <= nk) return k_->exact_columns_sq_norm(col0, width);
  return std::nullopt;
}

// ---------------------------------------------------------------- sampled DCT

SampledDctOperator::SampledDctOperator(std::vector<Index> rows, Index n, BlockStructure structure)
    : BlockOperator(std::move(structure)), rows_(std::move(rows)), n_(n) {
  check_size(static_cast<Index>(rows_.size()), this->rows(), "SampledDctOperator rows");
  check_size(n_, cols(), "SampledDctOperator cols");
  std::unordered_set<Index> seen;
  for (Index r : rows_) {
    if (r < 0 || r >= n_) throw std::invalid_argument("sampled_transform: row index out of range");
    if (!seen.insert(r).second) throw std::invalid_argument("sampled_transform: duplicate row index");
  }
  cos_table_.resize(static_cast<std::size_t>(4 * n_));
  for (Index ph = 0; ph < 4 * n_; ++ph) {
    cos_table_[static_cast<std::size_t>(ph)] =
        std::cos(std::numbers::pi * static_cast<double>(ph) / (2.0 * static_cast<double>(n_)));
  }
  row_scale_.resize(static_cast<std::size_t>(rows_.size()));
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    row_scale_[r] = rows_[r] == 0 ? std::sqrt(1.0 / static_cast<double>(n_))
                                  : std::sqrt(2.0 / static_cast<double>(n_));
  }
}

double SampledDctOperator::entry(Index r, Index j) const {
  const Index k = rows_[static_cast<std::size_t>(r)];
  // Reduce the phase exactly in integers: cos has period 4n in these units.
  const Index phase = ((2 * j + 1) * k) % (4 * n_);
  return row_scale_[static_cast<std::size_t>(r)] * cos_table_[static_cast<std::size_t>(phase)];
}

void SampledDctOperator::add_columns_image(Index col0, Index width, const ConstVecRef& v,
                                           double alpha, VecRef out) const {
  for (Index j = 0; j < width; ++j) {
    const double scale = alpha * v[j];
    if (scale == 0.0) continue;
    for (Index r = 0; r < rows(); ++r) out[r] += scale * entry(r, col0 + j);
  }
}

void SampledDctOperator::columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                                         VecRef out) const {
  for (Index j = 0; j < width; ++j) {
    double acc = 0.0;
    for (Index r = 0; r < rows(); ++r) acc += entry(r, col0 + j) * y[r];
    out[j] = acc;
  }
}

// ---------------------------------------------------------------- low rank

LowRankProductOperator::LowRankProductOperator(Matrix left, Matrix right,
                                               BlockStructure structure)
    : BlockOperator(std::move(structure)), left_(std::move(left)), right_(std::move(right)) {
  check_size(left_.cols(), right_.rows(), "low_rank_product inner dimension");
  check_size(left_.rows(), rows(), "low_rank_product rows");
  check_size(right_.cols(), cols(), "low_rank_product cols");
}

void LowRankProductOperator::add_columns_image(Index col0, Index width, const ConstVecRef& v,
                                               double alpha, VecRef out) const {
  const Vector inner = right_.middleCols(col0, width) * v;
  out.noalias() += alpha * (left_ * inner);
}

void LowRankProductOperator::columns_adjoint(Index col0, Index width, const ConstVecRef& y,
                                             VecRef out) const {
  const Vector inner = left_.transpose() * y;
  out.noalias() = right_.middleCols(col0, width).transpose() * inner;
}

// ---------------------------------------------------------------- reblocked

ReblockedOperator::ReblockedOperator(OperatorPtr base, BlockStructure structure)
    : BlockOperator(std::move(structure)), base_(std::move(base)) {
  check_size(rows(), base_->rows(), "with_blocks rows");
  check_size(cols(), base_->cols(), "with_blocks cols");
}

// ---------------------------------------------------------------- factories

OperatorPtr dense_operator(RowMatrix a, Index block_width) {
  auto s = BlockStructure::uniform(a.rows(), a.cols(), block_width);
  return std::make_shared<DenseOperator>(std::move(a), std::move(s));
}

OperatorPtr identity_operator(Index n, Index block_width) {
  return std::make_shared<IdentityOperator>(BlockStructure::uniform(n, n, block_width));
}

OperatorPtr hcat(OperatorPtr k, double sign, Index tail_width) {
  const Index m = k->rows();
  const auto tail = tail_width <= 0 ? BlockStructure::single(m, m)
                                    : BlockStructure::uniform(m, m, tail_width);
  return std::make_shared<HCatOperator>(std::move(k), sign, tail);
}

OperatorPtr sampled_transform(std::vector<Index> rows, Index n, Index block_width) {
  auto s = BlockStructure::uniform(static_cast<Index>(rows.size()), n, block_width);
  return std::make_shared<SampledDctOperator>(std::move(rows), n, std::move(s));
}

OperatorPtr low_rank_product(Matrix left, Matrix right, Index block_width) {
  if (left.cols() != right.rows()) {
    throw std::invalid_argument("low_rank_product: inner dimensions differ");
  }
  auto s = BlockStructure::uniform(left.rows(), right.cols(), block_width);
  return std::make_shared<LowRankProductOperator>(std::move(left), std::move(right), std::move(s));
}

OperatorPtr with_blocks(const OperatorPtr& base, BlockStructure structure) {
  if (structure == base->structure()) return base;
  // Avoid stacking wrappers.
  if (auto* re = dynamic_cast<const ReblockedOperator*>(base.get())) {
    return with_blocks(re->base(), std::move(structure));
  }
  return std::make_shared<ReblockedOperator>(base, std::move(structure));
}

Matrix dct_matrix(Index n) {
  SampledDctOperator full([n] {
    std::vector<Index> r(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] = k;
    return r;
  }(), n, BlockStructure::single(n, n));
  Matrix phi(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j) phi(k, j) = full.entry(k, j);
  return phi;
}

BlockNorms compute_block_norms(const BlockOperator& a, const PowerIterationOptions& opts) {
  BlockNorms norms;
  norms.tolerance = opts.tolerance;
  norms.lambda.reserve(static_cast<std::size_t>(a.num_blocks()));
  for (Index i = 0; i < a.num_blocks(); ++i) norms.lambda.push_back(a.block_sq_norm(i, opts));
  return norms;
}

double full_sq_norm(const BlockOperator& a, const PowerIterationOptions& opts) {
  Vector image(a.rows());
  return power_iteration(a.cols(), range_seed(0, a.cols()), opts,
                         [&](const Vector& v, Vector& out) {
                           a.apply_into(v, image);
                           a.adjoint_into(image, out);
                         });
}

}  // namespace coopd
