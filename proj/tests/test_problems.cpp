#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/SVD>
#include <json.hpp>

#include "coopd/operator_io.hpp"
#include "coopd/problems.hpp"
#include "coopd/solvers.hpp"
#include "test_support.hpp"

using namespace coopd;
using namespace coopd::testing;

namespace {

double inf_norm(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

Index nnz(const Vector& v) { return (v.array() != 0.0).count(); }

}  // namespace

TEST(GenBpGaussian, ConsistentSparseAndDeterministic) {
  const auto p = gen_bp_gaussian(50, 200, 0.05, {-10, 10}, 3);
  ASSERT_TRUE(p.truth.x);
  EXPECT_EQ(nnz(*p.truth.x), 10);
  EXPECT_LE(p.truth.x->cwiseAbs().maxCoeff(), 10.0);
  EXPECT_LE(inf_norm(p.a->apply(*p.truth.x) - p.b), 1e-12);
  EXPECT_EQ(kind_name(p.g.block(0)), "l1");

  const auto q = gen_bp_gaussian(50, 200, 0.05, {-10, 10}, 3);
  EXPECT_EQ(p.a->to_dense(), q.a->to_dense());
  EXPECT_EQ(p.b, q.b);
  EXPECT_NE(gen_bp_gaussian(50, 200, 0.05, {-10, 10}, 4).b, p.b);
}

TEST(GenBpGaussian, PaperScaleParametersAndPreconditions) {
  // Full-size dimensions are accepted; only the metadata is checked here.
  EXPECT_THROW(gen_bp_gaussian(50, 200, 1.0, {-10, 10}, 1), std::invalid_argument);
  EXPECT_THROW(gen_bp_gaussian(200, 50, 0.05, {-10, 10}, 1), std::invalid_argument);
  const auto p = gen_bp_gaussian(20, 80, 0.05, {-10, 10}, 1, 10);
  EXPECT_EQ(p.num_blocks(), 8);
  EXPECT_EQ(p.param("density", 0.0), 0.05);
}

TEST(GenBpDct, ConsistentAndHeadSupported) {
  const auto p = gen_bp_dct(100, 400, 5, 10, 2);
  EXPECT_LE(inf_norm(p.a->apply(*p.truth.x) - p.b), 1e-12);
  EXPECT_EQ(nnz(*p.truth.x), 5);
  EXPECT_EQ(nnz(p.truth.x->tail(390)), 0);
}

TEST(GenBpDct, FullSamplingIsOrthonormalRecovery) {
  const auto p = gen_bp_dct(32, 32, 4, 8, 5);
  const Vector rec = p.a->adjoint_apply(p.b);
  EXPECT_LE(inf_norm(rec - *p.truth.x), 1e-10);
  EXPECT_THROW(gen_bp_dct(10, 40, 5, 4, 1), std::invalid_argument);
}

TEST(GenBpNoisy, RoundingNoiseRecordedAndBounded) {
  NoisyBpParams q;
  q.m = 40;
  q.n = 160;
  q.k_nonzero = 5;
  q.noise = NoiseKind::Rounding;
  const auto p = gen_bp_noisy(q, 7);
  ASSERT_TRUE(p.truth.noise);
  EXPECT_LE(inf_norm(*p.truth.noise), 0.5);
  EXPECT_LE(inf_norm(p.a->apply(*p.truth.x) + *p.truth.noise - p.b), 1e-12);
  for (Index i = 0; i < p.b.size(); ++i) EXPECT_EQ(p.b[i], std::round(p.b[i]));
}

TEST(GenBpNoisy, IntegerImageGivesZeroRoundingNoise) {
  NoisyBpParams q;
  q.m = 10;
  q.n = 40;
  q.k_nonzero = 0;  // A x = 0 is integer valued
  q.noise = NoiseKind::Rounding;
  const auto p = gen_bp_noisy(q, 1);
  EXPECT_TRUE(p.truth.noise->isZero(0.0));
}

TEST(GenBpNoisy, LowRankHasHalfRank) {
  NoisyBpParams q;
  q.m = 200;
  q.n = 800;
  q.matrix = NoisyMatrix::LowRank;
  const auto p = gen_bp_noisy(q, 3);
  const Eigen::BDCSVD<Matrix> svd(p.a->to_dense());
  const Vector s = svd.singularValues();
  const Index rank = (s.array() > 1e-9 * s[0]).count();
  EXPECT_LE(rank, 100);
  EXPECT_GE(rank, 100);
  q.m = 201;
  EXPECT_THROW(gen_bp_noisy(q, 3), std::invalid_argument);
}

TEST(GenBpNoisy, GaussianNoiseScaleAndDictionary) {
  NoisyBpParams q;
  q.m = 400;
  q.n = 800;
  q.noise_std = 2.0;
  const auto p = gen_bp_noisy(q, 4);
  const double sd = std::sqrt(p.truth.noise->squaredNorm() / 400.0);
  EXPECT_NEAR(sd, 2.0, 0.25);

  q.m = 20;
  q.n = 64;
  q.dictionary = Dictionary::Dct;
  const auto d = gen_bp_noisy(q, 4);
  EXPECT_LE(inf_norm(d.a->apply(*d.truth.x) + *d.truth.noise - d.b), 1e-10);
}

TEST(GenRpca, StructureAndTruth) {
  const auto p = gen_rpca(60, 40, 3, 0.05, 500.0, 9);
  ASSERT_EQ(p.num_blocks(), 2);
  const Index nn = 2400;
  const Vector& x = *p.truth.x;
  const Matrix l = Eigen::Map<const Matrix>(x.data(), 60, 40);
  const Matrix s = Eigen::Map<const Matrix>(x.data() + nn, 60, 40);
  const Matrix m = Eigen::Map<const Matrix>(p.b.data(), 60, 40);
  EXPECT_LE((l + s - m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(nnz(x.tail(nn)), 120);
  EXPECT_LE(s.cwiseAbs().maxCoeff(), 500.0);
  const Vector sv = Eigen::BDCSVD<Matrix>(l).singularValues();
  EXPECT_LE(sv[3], 1e-9 * sv[0]);
  EXPECT_DOUBLE_EQ(p.param("lambda", 0.0), 1.0 / std::sqrt(60.0));
  const BlockNorms n = compute_block_norms(*p.a);
  EXPECT_EQ(n.lambda, (std::vector<double>{1.0, 1.0}));
}

TEST(GenRpca, FullRankNoSparsePart) {
  const auto p = gen_rpca(8, 5, 5, 0.0, 500.0, 2);
  EXPECT_TRUE(p.truth.x->tail(40).isZero(0.0));
  EXPECT_THROW(gen_rpca(8, 5, 0, 0.05, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(gen_rpca(8, 5, 6, 0.05, 1.0, 1), std::invalid_argument);
}

TEST(GenLp, MatchesIndependentVertexEnumeration) {
  for (auto [m, n] : {std::pair<Index, Index>{2, 4}, {4, 8}, {5, 10}}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto p = gen_lp(m, n, seed);
      ASSERT_TRUE(p.truth.g_opt);
      const Matrix a = p.a->to_dense();
      Vector c(n);
      for (Index j = 0; j < n; ++j) c[j] = std::get<LinearNonnegFn>(p.g.block(j)).cost[0];
      const double want = brute_force_lp_value(a, p.b, c);
      EXPECT_NEAR(*p.truth.g_opt, want, 1e-6 * (1.0 + std::abs(want)));
      const Vector& x = *p.truth.x_opt;
      EXPECT_GE(x.minCoeff(), 0.0);
      EXPECT_LE(inf_norm(a * x - p.b), 1e-9);
      // Dual feasibility of the multiplier: c + A^T y >= 0, complementary slackness.
      const Vector red = c + a.transpose() * *p.truth.multiplier;
      EXPECT_GE(red.minCoeff(), -1e-9);
      EXPECT_LE(std::abs(red.dot(x)), 1e-8);
    }
  }
}

TEST(GenLp, ZeroCostTerminatesAtFeasibility) {
  const auto p = gen_lp(3, 6, 1, true);
  EXPECT_NEAR(*p.truth.g_opt, 0.0, 0.0);
  RunOptions o;
  o.steps = default_steps(compute_block_norms(*p.a), 0.05);
  o.stop = StoppingRule::normal_eq(1e-8, true);
  o.max_epochs = 20000;
  const auto out = run(p, o);
  EXPECT_EQ(out.report.termination, "converged");
  EXPECT_GE(out.x.minCoeff(), 0.0);
  EXPECT_LE(inf_norm(p.a->apply(out.x) - p.b), 1e-5);
}

TEST(GenConsensus, MedianOracle) {
  const Vector a = (Vector(3) << 1, 2, 9).finished();
  const auto p = gen_consensus(3, path_edges(3), a, 0);
  EXPECT_EQ(p.truth.consensus_interval->first, 2.0);
  EXPECT_EQ(p.truth.consensus_interval->second, 2.0);
  EXPECT_DOUBLE_EQ(*p.truth.g_opt, 1.0 + 7.0);
  EXPECT_TRUE(p.a->apply(Vector::Ones(3)).isZero(0.0));

  const auto q = gen_consensus(2, path_edges(2), (Vector(2) << 5, 5).finished(), 0);
  EXPECT_EQ(q.truth.consensus_interval->first, 5.0);
  EXPECT_EQ(*q.truth.g_opt, 0.0);
}

TEST(GenConsensus, RingIncidenceAndDisconnectedRejected) {
  const auto p = gen_consensus(10, ring_edges(10), {}, 3);
  EXPECT_EQ(p.rows(), 10);
  EXPECT_TRUE(p.a->apply(Vector::Ones(10)).isZero(0.0));
  EXPECT_THROW(gen_consensus(4, {{0, 1}, {2, 3}}, {}, 1), std::invalid_argument);
  EXPECT_TRUE(is_connected(5, ring_edges(5)));
  EXPECT_FALSE(is_connected(4, {{0, 1}}));
}

TEST(GenComposite, IdentityKWithL1HasZeroOptimum) {
  const auto p = gen_composite(identity_operator(3, 1), L1Fn{}, L1Fn{});
  EXPECT_EQ(p.num_blocks(), 4);
  const BlockNorms n = compute_block_norms(*p.a);
  EXPECT_EQ(n.lambda.back(), 1.0);
  EXPECT_EQ(p.g.value(Vector::Zero(6)), 0.0);
  RunOptions o;
  o.steps = default_steps(n, 0.2);
  o.max_epochs = 200;
  o.x0 = Vector::Ones(6);
  const auto out = run(p, o);
  EXPECT_LE(inf_norm(out.x), 1e-6);
}

TEST(GenComposite, BallConstrainedDenoisingShape) {
  const RowMatrix a0 = random_matrix(5, 7, 3);
  const Vector b = random_vector(5, 4);
  const auto p = gen_composite(dense_operator(a0, 1), BallIndicatorFn{0.5, {}}, L1Fn{}, b);
  // (v, A0 v - b) is feasible for A x = b, and w = A0 v - b lies in the ball when v solves A0 v = b.
  const Vector v = a0.transpose() * (a0 * a0.transpose()).ldlt().solve(b);
  Vector x(12);
  x << v, a0 * v - b;
  EXPECT_LE(inf_norm(p.a->apply(x) - p.b), 1e-10);
  EXPECT_TRUE(std::isfinite(p.g.value(x)));
  EXPECT_THROW(gen_composite(dense_operator(a0), ZeroFn{}, L1Fn{}, Vector::Zero(3)), std::invalid_argument);
}

TEST(GenComposite, RandomKDrivesVToZero) {
  const auto p = gen_composite(dense_operator(random_matrix(6, 4, 8), 1), ZeroFn{}, L1Fn{});
  RunOptions o;
  o.steps = default_steps(compute_block_norms(*p.a), 0.1);
  o.max_epochs = 500;
  o.x0 = Vector::Ones(10);
  const auto out = run(p, o);
  EXPECT_LE(inf_norm(out.x.head(4)), 1e-6);
}

TEST(ExportInstance, WritesReadableFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "coopd_export_test";
  std::filesystem::create_directories(dir);
  const auto p = gen_bp_gaussian(10, 30, 0.1, {-1, 1}, 2);
  const std::string stem = (dir / "inst").string();
  export_instance(p, stem);
  EXPECT_EQ(io::read_vector(stem + ".b"), p.b);
  EXPECT_EQ(io::read_vector(stem + ".x_true"), *p.truth.x);
  std::ifstream in(stem + ".json");
  const auto side = nlohmann::json::parse(in);
  EXPECT_EQ(side["seed"], 2);
  EXPECT_EQ(side["rows"], 10);
  EXPECT_EQ(side["label"], p.label);
  std::filesystem::remove_all(dir);
}
