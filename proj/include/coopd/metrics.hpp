#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coopd/problem_instance.hpp"

namespace coopd {

// ------------------------------------------------------------ stopping rules

/// ||Ax - b||_inf <= eps and dist(-A^T y, d(scale ||.||_1)(x))_inf <= eps.
struct BpKkt {
  double eps = 1e-6;
  double scale = 1.0;
};

/// ||L' - L + S - S'||_F / (tau ||M||_F) <= eps and ||L + S - M||_inf / ||M||_F <= eps,
/// with primes denoting the previous epoch and tau the primal prox step.
struct RpcaKkt {
  double eps = 1e-6;
};

/// ||A^T(Ax - b)|| <= eps (times its epoch-0 value when relative).
struct NormalEq {
  double eps = 1e-4;
  bool relative = true;
};

/// epoch >= epochs.
struct MaxEpochs {
  std::int64_t epochs = 0;
};

using StoppingClause = std::variant<BpKkt, RpcaKkt, NormalEq, MaxEpochs>;

/// Conjunction of clauses; an empty rule never fires.
struct StoppingRule {
  std::vector<StoppingClause> all_of;

  static StoppingRule never() { return {}; }
  static StoppingRule bp(double eps = 1e-6, double scale = 1.0) { return {{BpKkt{eps, scale}}}; }
  static StoppingRule rpca(double eps = 1e-6) { return {{RpcaKkt{eps}}}; }
  static StoppingRule normal_eq(double eps, bool relative = true) {
    return {{NormalEq{eps, relative}}};
  }
};

/// Everything a stopping predicate may look at, all re-derivable from
/// (A, b, iterates).
struct StopContext {
  const ProblemInstance& problem;
  const Vector& x;
  const Vector* y;          // dual iterate (may be null)
  const Vector& residual;   // Ax - b
  const Vector& x_prev;     // iterate at the previous epoch boundary
  double primal_step;       // prox step of the first block
  std::int64_t epoch;
  double normal_eq;
  double initial_normal_eq;
};

struct StopEvaluation {
  bool fired = false;
  double primal = std::numeric_limits<double>::quiet_NaN();  // first measured quantity
  double dual = std::numeric_limits<double>::quiet_NaN();    // second measured quantity
};

StopEvaluation evaluate(const StoppingRule& rule, const StopContext& ctx);

// ------------------------------------------------------------ measures

struct KktMeasures {
  double feasibility = 0.0;    // ||Ax - b||_inf (BP) or ||L + S - M||_inf / ||M|| (RPCA)
  double stationarity = 0.0;   // subgradient distance (BP) or normalized change (RPCA)
};

KktMeasures bp_kkt_measures(const ConstVecRef& x, const ConstVecRef& y, const BlockOperator& a,
                            const ConstVecRef& b, double scale);
bool bp_kkt(const ConstVecRef& x, const ConstVecRef& y, const BlockOperator& a,
            const ConstVecRef& b, double scale = 1.0, double eps = 1e-6);

KktMeasures rpca_kkt_measures(const Matrix& l_prev, const Matrix& l, const Matrix& s_prev,
                              const Matrix& s, const Matrix& m, double tau);
bool rpca_kkt(const Matrix& l_prev, const Matrix& l, const Matrix& s_prev, const Matrix& s,
              const Matrix& m, double tau, double eps = 1e-6);

/// ||A^T (Ax - b)||_2.
double normal_eq_residual(const BlockOperator& a, const ConstVecRef& b, const ConstVecRef& x);

struct RateDiagnostic {
  double sup_k2_gap = 0.0;
  double sup_k_gap = 0.0;
  double tail_slope = 0.0;  // least-squares slope of log gap vs log k, last half
};

/// gaps[k] = f(s^k) - f_* for k = 0, 1, ...
RateDiagnostic rate_probe(std::span<const double> gaps);

// ------------------------------------------------------------ reports

struct EpochRecord {
  std::int64_t epoch = 0;
  std::int64_t iterations = 0;
  double feas_inf = 0.0;      // ||Ax - b||_inf at the reported point
  double feas_inf_x = 0.0;    // same at x (differs from feas_inf only for the Tseng form)
  double normal_eq = 0.0;
  double obj_x = 0.0;
  double obj_s = std::numeric_limits<double>::quiet_NaN();
  double signal_err = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  double stop_primal = std::numeric_limits<double>::quiet_NaN();
  double stop_dual = std::numeric_limits<double>::quiet_NaN();
};

struct RunReport {
  std::string method;
  std::string problem;
  std::uint64_t seed = 0;
  std::int64_t num_blocks = 1;
  std::int64_t iterations_per_epoch = 1;  // 1 for the full method, num_blocks otherwise
  std::int64_t epochs = 0;
  std::int64_t iterations = 0;
  std::string termination;  // "converged" | "max_epochs" | "diverged"
  std::optional<std::int64_t> diverged_at;
  double sigma = 0.0;
  double tau_min = 0.0;
  double tau_max = 0.0;
  double gamma = 0.0;
  std::uint64_t svd_count = 0;
  std::int64_t audits = 0;
  double max_audit_deviation = 0.0;  // max ||u - sigma(Ax - b)||_inf seen by audits
  std::vector<EpochRecord> history;

  bool converged() const { return termination == "converged"; }
  /// Throws if epoch/iteration accounting is inconsistent.
  void check_accounting() const;
};

inline constexpr const char* kCsvHeader = "epoch,feas_inf,normal_eq,obj_x,obj_s,signal_err,seconds";

/// One row per epoch with the columns of kCsvHeader.
void write_csv(std::ostream& out, const RunReport& report, bool include_seconds = true);
std::string to_csv(const RunReport& report, bool include_seconds = true);

}  // namespace coopd
