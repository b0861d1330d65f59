#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coopd/problem_instance.hpp"

namespace coopd {

/// Basis pursuit with a Gaussian matrix: ceil(density n) nonzeros, uniform in
/// [lo, hi); b = A x-dagger; g = ||.||_1.
ProblemInstance gen_bp_gaussian(Index m, Index n, double density, std::pair<double, double> range,
                                std::uint64_t seed, Index block_width = 1);

/// Basis pursuit with m distinct sampled rows of the orthonormal DCT-II;
/// k standard normal nonzeros among the first `head` coordinates.
ProblemInstance gen_bp_dct(Index m, Index n, Index k_nonzero, Index head, std::uint64_t seed,
                           Index block_width = 1);

enum class NoisyMatrix { Gaussian, LowRank };
enum class NoiseKind { Gaussian, Rounding, None };
enum class Dictionary { None, Dct };

struct NoisyBpParams {
  Index m = 200;
  Index n = 800;
  Index k_nonzero = 10;
  NoisyMatrix matrix = NoisyMatrix::Gaussian;
  NoiseKind noise = NoiseKind::Gaussian;
  double noise_std = 1.0;
  Dictionary dictionary = Dictionary::None;
  Index block_width = 1;
};

/// b = A x-dagger + eps (Gaussian, standard deviation noise_std) or
/// b = round(A x-dagger) (half away from zero). LowRank uses A = A_L A_R with
/// inner dimension m/2. With Dictionary::Dct, A = M Phi for a Gaussian M and
/// the orthonormal DCT Phi, and x-dagger has standard normal nonzeros.
ProblemInstance gen_bp_noisy(const NoisyBpParams& params, std::uint64_t seed);

/// min ||L||_* + lambda ||S||_1 s.t. L + S = M over x = (vec L, vec S), column-major.
/// L-dagger = Q1 Q2 with Gaussian factors; S-dagger has round(density n1 n2)
/// entries uniform in [-magnitude, magnitude). lambda = 1/sqrt(n1) unless given.
ProblemInstance gen_rpca(Index n1, Index n2, Index rank, double density, double magnitude,
                         std::uint64_t seed, std::optional<double> lambda = std::nullopt,
                         SvdBackend backend = SvdBackend::Exact);

/// min <c, x> s.t. Ax = b, x >= 0 with Gaussian A, b = A x0 for x0 > 0 and
/// c = s + A^T w with s > 0 (bounded below by w^T b). For n <= kLpOracleMaxCols
/// the truth holds the vertex-enumeration optimum and its multiplier.
ProblemInstance gen_lp(Index m, Index n, std::uint64_t seed, bool zero_cost = false);

inline constexpr Index kLpOracleMaxCols = 12;

struct LpSolution {
  Vector x;
  Vector y;  // -A^T y in c + N_{x >= 0}(x)
  double value = 0.0;
};

/// Exhaustive search over basic feasible solutions of {Ax = b, x >= 0}.
/// nullopt when infeasible. Requires n <= kLpOracleMaxCols.
std::optional<LpSolution> lp_vertex_oracle(const Matrix& a, const Vector& b, const Vector& c);

using Edge = std::pair<Index, Index>;

std::vector<Edge> ring_edges(Index p);
std::vector<Edge> path_edges(Index p);
bool is_connected(Index p, const std::vector<Edge>& edges);

/// min sum_i |x_i - a_i| s.t. x_u = x_v on every edge. Empty `a` draws node
/// data uniform in [-10, 10) from the seed.
ProblemInstance gen_consensus(Index p, const std::vector<Edge>& edges, Vector a, std::uint64_t seed);

/// Minimizers of sum_i |t - a_i|: [a_(lo), a_(hi)] (a single point for odd p).
std::pair<double, double> median_interval(Vector a);

/// min r(v) + f(w) s.t. K v - w = 0. K's blocks are kept; w is one block.
ProblemInstance gen_composite(OperatorPtr k, BlockFunction f_block, BlockFunction r_block,
                              Vector b = {});

/// Writes <stem>.A.* (operator), <stem>.b and truth vectors as binary, plus a
/// JSON sidecar <stem>.json with label, parameters, seed and file names.
void export_instance(const ProblemInstance& problem, const std::string& stem);

}  // namespace coopd
