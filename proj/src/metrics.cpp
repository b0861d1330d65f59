#include "coopd/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace coopd {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const NuclearFn& nuclear_block(const ProblemInstance& p) {
  if (p.g.num_blocks() != 2) throw std::invalid_argument("RpcaKkt: expected an (L, S) two-block problem");
  const auto* nuc = std::get_if<NuclearFn>(&p.g.block(0));
  if (nuc == nullptr) throw std::invalid_argument("RpcaKkt: first block must be a nuclear norm");
  return *nuc;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

StopEvaluation evaluate(const StoppingRule& rule, const StopContext& ctx) {
  StopEvaluation out;
  if (rule.all_of.empty()) return out;
  out.fired = true;
  for (const auto& clause : rule.all_of) {
    const bool ok = std::visit(
        Overloaded{
            [&](const BpKkt& c) {
              if (ctx.y == nullptr) throw std::invalid_argument("BpKkt needs a dual iterate");
              const Vector aty = ctx.problem.a->adjoint_apply(*ctx.y);
              out.primal = ctx.residual.lpNorm<Eigen::Infinity>();
              out.dual = subdiff_dist_inf_l1(ctx.x, -aty, c.scale);
              return out.primal <= c.eps && out.dual <= c.eps;
            },
            [&](const RpcaKkt& c) {
              const NuclearFn& nuc = nuclear_block(ctx.problem);
              const Index n = nuc.rows * nuc.cols;
              const Eigen::Map<const Matrix> l(ctx.x.data(), nuc.rows, nuc.cols);
              const Eigen::Map<const Matrix> s(ctx.x.data() + n, nuc.rows, nuc.cols);
              const Eigen::Map<const Matrix> lp(ctx.x_prev.data(), nuc.rows, nuc.cols);
              const Eigen::Map<const Matrix> sp(ctx.x_prev.data() + n, nuc.rows, nuc.cols);
              const Eigen::Map<const Matrix> m(ctx.problem.b.data(), nuc.rows, nuc.cols);
              const auto k = rpca_kkt_measures(lp, l, sp, s, m, ctx.primal_step);
              out.primal = k.feasibility;
              out.dual = k.stationarity;
              return k.feasibility <= c.eps && k.stationarity <= c.eps;
            },
            [&](const NormalEq& c) {
              const double target = c.relative ? c.eps * ctx.initial_normal_eq : c.eps;
              return ctx.normal_eq <= target;
            },
            [&](const MaxEpochs& c) { return ctx.epoch >= c.epochs; },
        },
        clause);
    out.fired = out.fired && ok;
  }
  return out;
}

KktMeasures bp_kkt_measures(const ConstVecRef& x, const ConstVecRef& y, const BlockOperator& a,
                            const ConstVecRef& b, double scale) {
  KktMeasures k;
  k.feasibility = (a.apply(x) - b).lpNorm<Eigen::Infinity>();
  k.stationarity = subdiff_dist_inf_l1(x, -a.adjoint_apply(y), scale);
  return k;
}

bool bp_kkt(const ConstVecRef& x, const ConstVecRef& y, const BlockOperator& a,
            const ConstVecRef& b, double scale, double eps) {
  const auto k = bp_kkt_measures(x, y, a, b, scale);
  return k.feasibility <= eps && k.stationarity <= eps;
}

KktMeasures rpca_kkt_measures(const Matrix& l_prev, const Matrix& l, const Matrix& s_prev,
                              const Matrix& s, const Matrix& m, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("rpca_kkt: tau must be positive");
  const double mnorm = m.norm();
  if (mnorm == 0.0) throw std::invalid_argument("rpca_kkt: M must be nonzero");
  KktMeasures k;
  k.stationarity = (l_prev - l + s - s_prev).norm() / (tau * mnorm);
  k.feasibility = (s + l - m).cwiseAbs().maxCoeff() / mnorm;
  return k;
}

bool rpca_kkt(const Matrix& l_prev, const Matrix& l, const Matrix& s_prev, const Matrix& s,
              const Matrix& m, double tau, double eps) {
  const auto k = rpca_kkt_measures(l_prev, l, s_prev, s, m, tau);
  return k.stationarity <= eps && k.feasibility <= eps;
}

double normal_eq_residual(const BlockOperator& a, const ConstVecRef& b, const ConstVecRef& x) {
  if (b.size() != a.rows() || x.size() != a.cols()) {
    throw std::invalid_argument("normal_eq_residual: dimension mismatch");
  }
  return a.adjoint_apply(a.apply(x) - b).norm();
}

RateDiagnostic rate_probe(std::span<const double> gaps) {
  RateDiagnostic d;
  const auto count = static_cast<std::int64_t>(gaps.size());
  for (std::int64_t k = 1; k < count; ++k) {
    const double g = gaps[static_cast<std::size_t>(k)];
    const auto kd = static_cast<double>(k);
    d.sup_k2_gap = std::max(d.sup_k2_gap, kd * kd * g);
    d.sup_k_gap = std::max(d.sup_k_gap, kd * g);
  }
  // Tail slope over k in [K/2, K) where the gap is positive.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::int64_t used = 0;
  for (std::int64_t k = std::max<std::int64_t>(1, count / 2); k < count; ++k) {
    const double g = gaps[static_cast<std::size_t>(k)];
    if (!(g > 0.0)) continue;
    const double lx = std::log(static_cast<double>(k));
    const double ly = std::log(g);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used >= 2) {
    const double n = static_cast<double>(used);
    const double denom = n * sxx - sx * sx;
    if (denom > 0.0) d.tail_slope = (n * sxy - sx * sy) / denom;
  }
  return d;
}

void RunReport::check_accounting() const {
  if (static_cast<std::int64_t>(history.size()) != epochs + 1) {
    throw std::logic_error("RunReport: history must have epochs + 1 records");
  }
  if (termination != "diverged" && iterations != epochs * iterations_per_epoch) {
    throw std::logic_error("RunReport: iterations != epochs * iterations-per-epoch");
  }
}

void write_csv(std::ostream& out, const RunReport& report, bool include_seconds) {
  out << (include_seconds ? kCsvHeader : "epoch,feas_inf,normal_eq,obj_x,obj_s,signal_err") << '\n';
  for (const auto& r : report.history) {
    out << r.epoch << ',' << fmt_double(r.feas_inf) << ',' << fmt_double(r.normal_eq) << ','
        << fmt_double(r.obj_x) << ',' << fmt_double(r.obj_s) << ',' << fmt_double(r.signal_err);
    if (include_seconds) out << ',' << fmt_double(r.seconds);
    out << '\n';
  }
}

std::string to_csv(const RunReport& report, bool include_seconds) {
  std::ostringstream s;
  write_csv(s, report, include_seconds);
  return s.str();
}

}  // namespace coopd
