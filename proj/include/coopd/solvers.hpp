#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopd/metrics.hpp"
#include "coopd/problem_instance.hpp"
#include "coopd/rng.hpp"

namespace coopd {

/// Step for blocks with lambda_i = 0, where tau_i sigma lambda_i < 1 holds for any tau_i.
inline constexpr double kTauCap = 1e12;

/// sigma > 0 and one tau_i per block with tau_i * sigma * lambda_i <= gamma < 1.
struct StepSizes {
  double sigma = 0.0;
  Vector tau;
  double gamma = 0.0;
};

/// tau_i = gamma / (sigma lambda_i), or kTauCap when lambda_i = 0.
StepSizes default_steps(std::span<const double> lambda, double sigma, double gamma = 0.99);
inline StepSizes default_steps(const BlockNorms& norms, double sigma, double gamma = 0.99) {
  return default_steps(norms.lambda, sigma, gamma);
}
StepSizes default_steps(const BlockOperator& a, double sigma, double gamma = 0.99);

/// Hand-picked steps; accepted iff tau_i * sigma * lambda_i < 1 for every block.
/// gamma records the largest product.
StepSizes manual_steps(std::span<const double> lambda, double sigma, Vector tau);

/// The full-operator method uses one scalar tau; tau * sigma * ||A||^2 < 1 is
/// the caller's responsibility.
StepSizes scalar_steps(Index num_blocks, double tau, double sigma);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& where, std::int64_t iteration)
      : std::runtime_error(where + ": non-finite iterate at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

// ------------------------------------------------------------ full PDA

/// Iterates of the full primal-dual method with cached products.
struct PdaState {
  Vector x;
  Vector y;
  Vector ax;   // A x
  Vector aty;  // A^T y
  std::int64_t k = 0;
};

PdaState make_pda_state(const ProblemInstance& p, Vector x0, Vector y0);

/// x+ = prox_{tau g}(x - tau A^T y);  y+ = y + sigma (A(2x+ - x) - b).
void pda_step(PdaState& state, const ProblemInstance& p, double tau, double sigma,
              ProxWorkspace* workspace = nullptr);

// ------------------------------------------------------------ coordinate PDA

/// x, dual y, and u = sigma (Ax - b) maintained by the updates.
struct CooPdState {
  Vector x;
  Vector y;
  Vector u;
  std::int64_t k = 0;
  Vector image;  // scratch: A_i t_i
  Vector grad;   // scratch: A_i^T y
};

/// y0 = u0 = sigma (A x0 - b).
CooPdState make_coo_state(const ProblemInstance& p, Vector x0, double sigma);

/// One block update on block i:
///   x_i+ = prox_{(tau_i/p) g_i}(x_i - (tau_i/p) A_i^T y),  t = x_i+ - x_i,
///   y+ = y + u + sigma (p+1) A_i t,  u+ = u + sigma A_i t.
void coo_pda_step(CooPdState& state, const ProblemInstance& p, const StepSizes& steps, Index i,
                  ProxWorkspace* workspace = nullptr);

// ------------------------------------------------------------ Tseng form

/// Primal-only equivalent form. rx = Ax - b and rs = As - b are kept up to
/// date so each step costs O(m) plus one block product, except for the
/// O(n) averaging of s.
struct TsengState {
  Vector x;
  Vector s;
  Vector rx;
  Vector rs;
  std::int64_t k = 0;
  double theta = 1.0;
  Vector image;
  Vector grad;
};

TsengState make_tseng_state(const ProblemInstance& p, Vector x0);

/// z = theta x + (1 - theta) s;  x+ = x, s+ = z except on block i:
///   x_i+ = prox_{(tau_i/p) g_i}(x_i - (tau_i sigma / (p theta)) A_i^T (Az - b)),
///   s_i+ = z_i + p theta (x_i+ - x_i);  theta+ = 1/(k + 2).
void tseng_step(TsengState& state, const ProblemInstance& p, const StepSizes& steps, Index i,
                ProxWorkspace* workspace = nullptr);

/// Duals of the coordinate method recovered from the Tseng iterates:
/// y = (sigma/theta)(Az - b), u = sigma (Ax - b).
Vector tseng_dual_y(const TsengState& state, double sigma);
Vector tseng_dual_u(const TsengState& state, double sigma);

/// Coefficients with s^k = sum_j beta[j] x^j, j = 0..k, from the recursion
///   beta_{k+1}^j     = (1 - theta_k) beta_k^j                 (j < k)
///   beta_{k+1}^k     = p theta_{k-1} (1 - theta_k) - (p-1) theta_k
///   beta_{k+1}^{k+1} = p theta_k
/// with beta_0^0 = 1 (the k = 0 case uses (1 - theta_0) beta_0^0 - (p-1) theta_0).
std::vector<double> beta_coefficients(std::int64_t k, std::int64_t p);

// ------------------------------------------------------------ driver

enum class Method { Pda, CooPda, TsengPda };

std::string method_name(Method m);

struct RunOptions {
  Method method = Method::CooPda;
  StepSizes steps;
  StoppingRule stop;
  std::uint64_t seed = 0;
  std::int64_t max_epochs = 1000;
  std::int64_t audit_every = 50;  // epochs between recomputations of Ax - b
  bool record_objective = true;
  Vector x0;  // empty: zero
  std::string label;  // method label for the report (default: method_name)
};

struct RunOutcome {
  RunReport report;
  Vector x;
  Vector y;
  Vector s;  // Tseng form only
};

/// Runs until the stopping rule fires at an epoch boundary or max_epochs is
/// reached. One epoch is one full iteration (Pda) or p block iterations.
/// Divergence is reported in the outcome, not thrown.
RunOutcome run(const ProblemInstance& problem, const RunOptions& options);

}  // namespace coopd
