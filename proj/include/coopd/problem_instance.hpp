#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coopd/operators.hpp"
#include "coopd/prox.hpp"

namespace coopd {

/// Whatever a generator knows about the answer.
struct GroundTruth {
  std::optional<Vector> x;           // x-dagger (for RPCA: (vec L, vec S))
  std::optional<Vector> noise;       // b - A x-dagger
  std::optional<Vector> x_opt;       // a known minimizer
  std::optional<double> g_opt;       // its objective value
  std::optional<Vector> multiplier;  // y with -A^T y in dg(x_opt) (LP only)
  std::optional<std::pair<double, double>> consensus_interval;  // minimizers of sum |t - a_i|
  // Part of x compared by the signal error (default: all of x).
  Index signal_offset = 0;
  Index signal_length = -1;
};

/// min g(x) s.t. x in argmin ||Ax - b||^2 / 2.
struct ProblemInstance {
  OperatorPtr a;
  Vector b;
  SeparableFunction g;
  GroundTruth truth;
  std::string label;
  std::vector<std::pair<std::string, double>> params;
  std::uint64_t seed = 0;

  Index rows() const { return a->rows(); }
  Index cols() const { return a->cols(); }
  Index num_blocks() const { return a->num_blocks(); }

  /// Throws when A, b and g disagree on dimensions or block partitions.
  void validate() const;

  /// The same problem with another column partition for both A and g.
  ProblemInstance reblocked(const BlockStructure& structure) const;
  ProblemInstance reblocked(Index block_width) const;

  /// ||x_sig - x_sig_true|| / ||x_sig_true|| over the signal part; nullopt without truth.
  std::optional<double> signal_error(const ConstVecRef& x) const;

  double param(const std::string& key, double fallback) const;
};

}  // namespace coopd
