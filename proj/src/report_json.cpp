#include "coopd/report_json.hpp"

#include <cmath>

namespace coopd {
namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json record_json(const EpochRecord& r, bool include_seconds) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"iterations", r.iterations},
                      {"feas_inf", num(r.feas_inf)},
                      {"feas_inf_x", num(r.feas_inf_x)},
                      {"normal_eq", num(r.normal_eq)},
                      {"obj_x", num(r.obj_x)},
                      {"obj_s", num(r.obj_s)},
                      {"signal_err", num(r.signal_err)},
                      {"stop_primal", num(r.stop_primal)},
                      {"stop_dual", num(r.stop_dual)}};
  if (include_seconds) j["seconds"] = num(r.seconds);
  return j;
}

}  // namespace

nlohmann::json report_to_json(const RunReport& r, bool include_seconds) {
  nlohmann::json j = {{"schema_version", kReportSchemaVersion},
                      {"method", r.method},
                      {"problem", r.problem},
                      {"seed", r.seed},
                      {"num_blocks", r.num_blocks},
                      {"iterations_per_epoch", r.iterations_per_epoch},
                      {"epochs", r.epochs},
                      {"iterations", r.iterations},
                      {"termination", r.termination},
                      {"sigma", num(r.sigma)},
                      {"tau_min", num(r.tau_min)},
                      {"tau_max", num(r.tau_max)},
                      {"gamma", num(r.gamma)},
                      {"svd_count", r.svd_count},
                      {"audits", r.audits},
                      {"max_audit_deviation", num(r.max_audit_deviation)}};
  j["diverged_at"] = r.diverged_at ? nlohmann::json(*r.diverged_at) : nlohmann::json(nullptr);
  auto& hist = j["history"] = nlohmann::json::array();
  for (const auto& rec : r.history) hist.push_back(record_json(rec, include_seconds));
  return j;
}

nlohmann::json final_metrics_json(const RunReport& r) {
  if (r.history.empty()) return nlohmann::json::object();
  return record_json(r.history.back(), false);
}

}  // namespace coopd
