#pragma once

#include <string>

#include <json.hpp>

#include "coopd/metrics.hpp"

namespace coopd {

inline constexpr int kReportSchemaVersion = 1;

/// {schema_version, method, problem, seed, ..., history: [{epoch, feas_inf, ...}]}.
/// Non-finite values are written as null.
nlohmann::json report_to_json(const RunReport& report, bool include_seconds = true);

/// Final-epoch metrics only.
nlohmann::json final_metrics_json(const RunReport& report);

}  // namespace coopd
