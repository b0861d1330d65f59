#include "coopd/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace coopd {
namespace {

bool all_finite(const ConstVecRef& v) { return v.allFinite(); }

void require_finite(const char* where, std::int64_t iteration, const ConstVecRef& a) {
  if (!all_finite(a)) throw DivergenceError(where, iteration);
}

void fill_tau_range(StepSizes& s) {
  if (s.tau.size() == 0) throw std::invalid_argument("StepSizes: empty tau");
  if (!(s.tau.array() > 0.0).all()) throw std::invalid_argument("StepSizes: tau must be positive");
}

}  // namespace

StepSizes default_steps(std::span<const double> lambda, double sigma, double gamma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("default_steps: sigma must be positive");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("default_steps: gamma must lie in (0, 1)");
  StepSizes s;
  s.sigma = sigma;
  s.gamma = gamma;
  s.tau.resize(static_cast<Index>(lambda.size()));
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < 0.0) throw std::invalid_argument("default_steps: negative block norm");
    s.tau[static_cast<Index>(i)] = lambda[i] > 0.0 ? gamma / (sigma * lambda[i]) : kTauCap;
  }
  fill_tau_range(s);
  return s;
}

StepSizes default_steps(const BlockOperator& a, double sigma, double gamma) {
  return default_steps(compute_block_norms(a), sigma, gamma);
}

StepSizes manual_steps(std::span<const double> lambda, double sigma, Vector tau) {
  if (!(sigma > 0.0)) throw std::invalid_argument("manual_steps: sigma must be positive");
  if (tau.size() != static_cast<Index>(lambda.size())) {
    throw std::invalid_argument("manual_steps: one tau per block required");
  }
  StepSizes s;
  s.sigma = sigma;
  s.tau = std::move(tau);
  fill_tau_range(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    worst = std::max(worst, s.tau[static_cast<Index>(i)] * sigma * lambda[i]);
  }
  if (!(worst < 1.0)) throw std::invalid_argument("manual_steps: tau_i sigma lambda_i must be < 1");
  s.gamma = worst;
  return s;
}

StepSizes scalar_steps(Index num_blocks, double tau, double sigma) {
  if (!(sigma > 0.0) || !(tau > 0.0)) throw std::invalid_argument("scalar_steps: steps must be positive");
  StepSizes s;
  s.sigma = sigma;
  s.tau = Vector::Constant(num_blocks, tau);
  return s;
}

// ------------------------------------------------------------ full PDA

PdaState make_pda_state(const ProblemInstance& p, Vector x0, Vector y0) {
  if (x0.size() != p.cols() || y0.size() != p.rows()) {
    throw std::invalid_argument("make_pda_state: dimension mismatch");
  }
  PdaState s;
  s.x = std::move(x0);
  s.y = std::move(y0);
  s.ax = p.a->apply(s.x);
  s.aty = p.a->adjoint_apply(s.y);
  return s;
}

void pda_step(PdaState& st, const ProblemInstance& p, double tau, double sigma, ProxWorkspace* ws) {
  const BlockStructure& bs = p.g.structure();
  Vector z = st.x - tau * st.aty;
  require_finite("pda", st.k + 1, z);
  Vector xn(st.x.size());
  for (Index i = 0; i < bs.num_blocks(); ++i) {
    xn.segment(bs.offset(i), bs.width(i)) =
        p.g.prox_block(i, tau, z.segment(bs.offset(i), bs.width(i)), ws);
  }
  Vector axn(p.rows());
  p.a->apply_into(xn, axn);
  st.y.noalias() += sigma * (2.0 * axn - st.ax - p.b);
  ++st.k;
  require_finite("pda", st.k, xn);
  require_finite("pda", st.k, st.y);
  st.x = std::move(xn);
  st.ax = std::move(axn);
  p.a->adjoint_into(st.y, st.aty);
}

// ------------------------------------------------------------ coordinate PDA

CooPdState make_coo_state(const ProblemInstance& p, Vector x0, double sigma) {
  if (x0.size() != p.cols()) throw std::invalid_argument("make_coo_state: dimension mismatch");
  CooPdState s;
  s.x = std::move(x0);
  s.u = sigma * (p.a->apply(s.x) - p.b);
  s.y = s.u;
  s.image.resize(p.rows());
  s.grad.resize(p.a->structure().max_width());
  return s;
}

void coo_pda_step(CooPdState& st, const ProblemInstance& p, const StepSizes& steps, Index i,
                  ProxWorkspace* ws) {
  const BlockStructure& bs = p.a->structure();
  bs.check_block(i);
  const Index off = bs.offset(i);
  const Index w = bs.width(i);
  const double np = static_cast<double>(bs.num_blocks());
  const double step = steps.tau[i] / np;

  auto grad = st.grad.head(w);
  p.a->block_adjoint_into(i, st.y, grad);
  auto xi = st.x.segment(off, w);
  const Vector zi = xi - step * grad;
  require_finite("coo-pda", st.k + 1, zi);
  Vector t = p.g.prox_block(i, step, zi, ws);
  t -= xi;

  st.y += st.u;
  if (!t.isZero(0.0)) {
    st.image.setZero();
    p.a->add_block_image(i, t, 1.0, st.image);
    st.y.noalias() += (steps.sigma * (np + 1.0)) * st.image;
    st.u.noalias() += steps.sigma * st.image;
    xi += t;
  }
  ++st.k;
  require_finite("coo-pda", st.k, xi);
  require_finite("coo-pda", st.k, st.y);
  require_finite("coo-pda", st.k, st.u);
}

// ------------------------------------------------------------ Tseng form

TsengState make_tseng_state(const ProblemInstance& p, Vector x0) {
  if (x0.size() != p.cols()) throw std::invalid_argument("make_tseng_state: dimension mismatch");
  TsengState s;
  s.x = std::move(x0);
  s.s = s.x;
  s.rx = p.a->apply(s.x) - p.b;
  s.rs = s.rx;
  s.image.resize(p.rows());
  s.grad.resize(p.a->structure().max_width());
  return s;
}

void tseng_step(TsengState& st, const ProblemInstance& p, const StepSizes& steps, Index i,
                ProxWorkspace* ws) {
  const BlockStructure& bs = p.a->structure();
  bs.check_block(i);
  const Index off = bs.offset(i);
  const Index w = bs.width(i);
  const double np = static_cast<double>(bs.num_blocks());
  const double theta = st.theta;

  // s <- z and rs <- Az - b; x is still x^k.
  st.s = theta * st.x + (1.0 - theta) * st.s;
  st.rs = theta * st.rx + (1.0 - theta) * st.rs;

  auto grad = st.grad.head(w);
  p.a->block_adjoint_into(i, st.rs, grad);
  const double step = steps.tau[i] / np;
  const double gscale = steps.tau[i] * steps.sigma / (np * theta);
  auto xi = st.x.segment(off, w);
  const Vector zi = xi - gscale * grad;
  require_finite("tseng", st.k + 1, zi);
  Vector t = p.g.prox_block(i, step, zi, ws);
  t -= xi;

  if (!t.isZero(0.0)) {
    st.image.setZero();
    p.a->add_block_image(i, t, 1.0, st.image);
    st.s.segment(off, w) += (np * theta) * t;
    st.rs.noalias() += (np * theta) * st.image;
    st.rx += st.image;
    xi += t;
  }
  ++st.k;
  st.theta = 1.0 / static_cast<double>(st.k + 1);
  require_finite("tseng", st.k, xi);
  require_finite("tseng", st.k, st.s.segment(off, w));
  require_finite("tseng", st.k, st.rs);
}

Vector tseng_dual_y(const TsengState& st, double sigma) {
  const Vector rz = st.theta * st.rx + (1.0 - st.theta) * st.rs;
  return (sigma / st.theta) * rz;
}

Vector tseng_dual_u(const TsengState& st, double sigma) { return sigma * st.rx; }

std::vector<double> beta_coefficients(std::int64_t k, std::int64_t p) {
  if (k < 0 || p < 1) throw std::invalid_argument("beta_coefficients: need k >= 0 and p >= 1");
  const double pd = static_cast<double>(p);
  std::vector<double> beta{1.0};
  beta.reserve(static_cast<std::size_t>(k + 1));
  for (std::int64_t j = 0; j < k; ++j) {
    const double theta = 1.0 / static_cast<double>(j + 1);
    for (double& b : beta) b *= 1.0 - theta;
    beta.back() -= (pd - 1.0) * theta;
    beta.push_back(pd * theta);
  }
  return beta;
}

// ------------------------------------------------------------ driver

std::string method_name(Method m) {
  switch (m) {
    case Method::Pda:
      return "pda";
    case Method::CooPda:
      return "coo-pda";
    case Method::TsengPda:
      return "tseng-pda";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

/// Live iterates of whichever method is running, with uniform accessors.
class Runner {
 public:
  Runner(const ProblemInstance& p, const RunOptions& o) : p_(p), o_(o) {
    Vector x0 = o.x0.size() ? o.x0 : Vector::Zero(p.cols());
    ws_.seed = derive_seed(o.seed, 1);
    switch (o.method) {
      case Method::Pda:
        pda_ = make_pda_state(p, x0, Vector::Zero(p.rows()));
        break;
      case Method::CooPda:
        coo_ = make_coo_state(p, x0, o.steps.sigma);
        break;
      case Method::TsengPda:
        tseng_ = make_tseng_state(p, x0);
        break;
    }
  }

  std::int64_t per_epoch() const { return o_.method == Method::Pda ? 1 : p_.num_blocks(); }

  void epoch(IndexStream& stream) {
    const double sigma = o_.steps.sigma;
    switch (o_.method) {
      case Method::Pda:
        pda_step(pda_, p_, o_.steps.tau[0], sigma, &ws_);
        break;
      case Method::CooPda:
        for (std::int64_t j = 0; j < per_epoch(); ++j) coo_pda_step(coo_, p_, o_.steps, stream.next(), &ws_);
        break;
      case Method::TsengPda:
        for (std::int64_t j = 0; j < per_epoch(); ++j) tseng_step(tseng_, p_, o_.steps, stream.next(), &ws_);
        break;
    }
  }

  std::int64_t iterations() const {
    switch (o_.method) {
      case Method::Pda:
        return pda_.k;
      case Method::CooPda:
        return coo_.k;
      case Method::TsengPda:
        return tseng_.k;
    }
    return 0;
  }

  const Vector& x() const {
    return o_.method == Method::Pda ? pda_.x : o_.method == Method::CooPda ? coo_.x : tseng_.x;
  }

  /// Ax - b from the maintained state.
  Vector residual() const {
    switch (o_.method) {
      case Method::Pda:
        return pda_.ax - p_.b;
      case Method::CooPda:
        return coo_.u / o_.steps.sigma;
      case Method::TsengPda:
        return tseng_.rx;
    }
    return {};
  }

  Vector exact_residual() const { return p_.a->apply(x()) - p_.b; }

  Vector dual() const {
    switch (o_.method) {
      case Method::Pda:
        return pda_.y;
      case Method::CooPda:
        return coo_.y;
      case Method::TsengPda:
        return tseng_dual_y(tseng_, o_.steps.sigma);
    }
    return {};
  }

  /// ||maintained residual - recomputed residual||_inf in u-units.
  double audit() const {
    const Vector exact = exact_residual();
    switch (o_.method) {
      case Method::Pda:
        return (pda_.ax - p_.b - exact).lpNorm<Eigen::Infinity>();
      case Method::CooPda:
        return (coo_.u - o_.steps.sigma * exact).lpNorm<Eigen::Infinity>();
      case Method::TsengPda:
        return o_.steps.sigma * (tseng_.rx - exact).lpNorm<Eigen::Infinity>();
    }
    return 0.0;
  }

  double primal_step() const {
    return o_.method == Method::Pda ? o_.steps.tau[0]
                                    : o_.steps.tau[0] / static_cast<double>(p_.num_blocks());
  }

  EpochRecord record(std::int64_t epoch, double seconds) const {
    EpochRecord r;
    r.epoch = epoch;
    r.iterations = iterations();
    r.seconds = seconds;
    const Vector res = residual();
    r.feas_inf_x = res.lpNorm<Eigen::Infinity>();
    if (o_.method == Method::TsengPda) {
      r.feas_inf = tseng_.rs.lpNorm<Eigen::Infinity>();
      r.normal_eq = p_.a->adjoint_apply(tseng_.rs).norm();
      if (o_.record_objective) r.obj_s = p_.g.value(tseng_.s);
    } else {
      r.feas_inf = r.feas_inf_x;
      r.normal_eq = p_.a->adjoint_apply(res).norm();
    }
    if (o_.record_objective) r.obj_x = p_.g.value(x());
    if (auto e = p_.signal_error(x())) r.signal_err = *e;
    return r;
  }

  RunOutcome finish(RunReport report) const {
    RunOutcome out;
    report.svd_count = ws_.svd_count;
    out.report = std::move(report);
    out.x = x();
    out.y = dual();
    if (o_.method == Method::TsengPda) out.s = tseng_.s;
    return out;
  }

 private:
  const ProblemInstance& p_;
  const RunOptions& o_;
  ProxWorkspace ws_;
  PdaState pda_;
  CooPdState coo_;
  TsengState tseng_;
};

}  // namespace

RunOutcome run(const ProblemInstance& problem, const RunOptions& o) {
  problem.validate();
  if (o.steps.tau.size() != problem.num_blocks()) {
    throw std::invalid_argument("run: one tau per block required");
  }
  if (!(o.steps.sigma > 0.0)) throw std::invalid_argument("run: sigma must be positive");
  if (o.max_epochs < 0) throw std::invalid_argument("run: max_epochs must be >= 0");

  RunReport report;
  report.method = o.label.empty() ? method_name(o.method) : o.label;
  report.problem = problem.label;
  report.seed = o.seed;
  report.num_blocks = o.method == Method::Pda ? 1 : problem.num_blocks();
  report.iterations_per_epoch = report.num_blocks;
  report.sigma = o.steps.sigma;
  report.tau_min = o.steps.tau.minCoeff();
  report.tau_max = o.steps.tau.maxCoeff();
  report.gamma = o.steps.gamma;
  report.termination = "max_epochs";

  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  Runner r(problem, o);
  IndexStream stream(o.seed, problem.num_blocks());
  report.history.push_back(r.record(0, elapsed()));
  const double initial_normal_eq = report.history.front().normal_eq;
  Vector x_prev = r.x();

  std::int64_t epoch = 0;
  try {
    while (epoch < o.max_epochs) {
      r.epoch(stream);
      ++epoch;
      EpochRecord rec = r.record(epoch, elapsed());

      if (o.audit_every > 0 && epoch % o.audit_every == 0) {
        report.max_audit_deviation = std::max(report.max_audit_deviation, r.audit());
        ++report.audits;
      }

      bool stop = false;
      if (!o.stop.all_of.empty()) {
        const Vector y = r.dual();
        Vector res = r.residual();
        StopContext ctx{problem, r.x(), &y, res, x_prev, r.primal_step(),
                        epoch, rec.normal_eq, initial_normal_eq};
        StopEvaluation ev = evaluate(o.stop, ctx);
        if (ev.fired && o.method != Method::Pda) {
          // Confirm against a recomputed residual.
          res = r.exact_residual();
          ev = evaluate(o.stop, ctx);
        }
        rec.stop_primal = ev.primal;
        rec.stop_dual = ev.dual;
        stop = ev.fired;
      }
      report.history.push_back(rec);
      x_prev = r.x();
      if (stop) {
        report.termination = "converged";
        break;
      }
    }
  } catch (const DivergenceError& e) {
    report.termination = "diverged";
    report.diverged_at = e.iteration();
  }
  report.epochs = static_cast<std::int64_t>(report.history.size()) - 1;
  report.iterations = r.iterations();
  RunOutcome out = r.finish(std::move(report));
  out.report.check_accounting();
  return out;
}

}  // namespace coopd
