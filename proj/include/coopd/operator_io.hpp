#pragma once

#include <filesystem>

#include "coopd/operators.hpp"

namespace coopd::io {

// On-disk forms. All integers are unsigned 64-bit little-endian, all values
// IEEE-754 binary64 little-endian.
//
//   dense   <path>:          m, n, then m*n values in column-major order
//   sparse  <stem>.indptr:   m, n, then n+1 column pointers
//           <stem>.indices:  nnz row indices
//           <stem>.values:   nnz values
//   vector  <path>:          len, then len values

void write_dense(const std::filesystem::path& path, const Matrix& a);
Matrix read_dense(const std::filesystem::path& path);

void write_sparse(const std::filesystem::path& stem, const SparseMatrix& a);
SparseMatrix read_sparse(const std::filesystem::path& stem);

void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(const std::filesystem::path& path);

/// Writes sparse operators in triplet form and everything else densely.
/// Returns the format tag ("dense" or "sparse").
const char* write_operator(const std::filesystem::path& stem, const BlockOperator& a);

}  // namespace coopd::io
