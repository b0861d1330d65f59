#include "coopd/operator_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace coopd::io {
namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  void u64(std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(bytes), 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path.string());
  }
  std::uint64_t u64() {
    unsigned char bytes[8];
    if (!in_.read(reinterpret_cast<char*>(bytes), 8)) {
      throw std::runtime_error("truncated file: " + path_.string());
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void write_dense(const std::filesystem::path& path, const Matrix& a) {
  Writer w(path);
  w.u64(static_cast<std::uint64_t>(a.rows()));
  w.u64(static_cast<std::uint64_t>(a.cols()));
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) w.f64(a(i, j));
  w.finish(path);
}

Matrix read_dense(const std::filesystem::path& path) {
  Reader r(path);
  const auto m = static_cast<Index>(r.u64());
  const auto n = static_cast<Index>(r.u64());
  Matrix a(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = r.f64();
  return a;
}

void write_sparse(const std::filesystem::path& stem, const SparseMatrix& input) {
  SparseMatrix a = input;
  a.makeCompressed();
  {
    const auto path = with_suffix(stem, ".indptr");
    Writer w(path);
    w.u64(static_cast<std::uint64_t>(a.rows()));
    w.u64(static_cast<std::uint64_t>(a.cols()));
    for (Index j = 0; j <= a.cols(); ++j) w.u64(static_cast<std::uint64_t>(a.outerIndexPtr()[j]));
    w.finish(path);
  }
  {
    const auto path = with_suffix(stem, ".indices");
    Writer w(path);
    for (Index k = 0; k < a.nonZeros(); ++k) w.u64(static_cast<std::uint64_t>(a.innerIndexPtr()[k]));
    w.finish(path);
  }
  {
    const auto path = with_suffix(stem, ".values");
    Writer w(path);
    for (Index k = 0; k < a.nonZeros(); ++k) w.f64(a.valuePtr()[k]);
    w.finish(path);
  }
}

SparseMatrix read_sparse(const std::filesystem::path& stem) {
  Reader ptr(with_suffix(stem, ".indptr"));
  const auto m = static_cast<Index>(ptr.u64());
  const auto n = static_cast<Index>(ptr.u64());
  std::vector<std::int64_t> indptr(static_cast<std::size_t>(n + 1));
  for (auto& p : indptr) p = static_cast<std::int64_t>(ptr.u64());
  const auto nnz = indptr.back();
  Reader idx(with_suffix(stem, ".indices"));
  Reader val(with_suffix(stem, ".values"));
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (Index j = 0; j < n; ++j) {
    for (auto k = indptr[static_cast<std::size_t>(j)]; k < indptr[static_cast<std::size_t>(j + 1)]; ++k) {
      const auto row = static_cast<std::int64_t>(idx.u64());
      triplets.emplace_back(row, j, val.f64());
    }
  }
  SparseMatrix a(m, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  Writer w(path);
  w.u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) w.f64(v[i]);
  w.finish(path);
}

Vector read_vector(const std::filesystem::path& path) {
  Reader r(path);
  Vector v(static_cast<Index>(r.u64()));
  for (Index i = 0; i < v.size(); ++i) v[i] = r.f64();
  return v;
}

const char* write_operator(const std::filesystem::path& stem, const BlockOperator& a) {
  const BlockOperator* target = &a;
  if (auto* re = dynamic_cast<const ReblockedOperator*>(target)) target = re->base().get();
  if (auto* sp = dynamic_cast<const SparseColumnOperator*>(target)) {
    write_sparse(stem, sp->matrix());
    return "sparse";
  }
  write_dense(with_suffix(stem, ".dense"), a.to_dense());
  return "dense";
}

}  // namespace coopd::io
