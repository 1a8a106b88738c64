#pragma once

#include <optional>
#include <string>

#include "rdd/dataset.hpp"
#include "rdd/metrics.hpp"
#include "rdd/postprocess.hpp"

namespace rdd {

/// Mean of the AP entries that are defined; nullopt without an AP table.
std::optional<double> mean_average_precision(const EvalReport& report);

/// Pretty-printed JSON; byte-identical for identical reports.
/// `sweep`, when given, is embedded under "sweep".
std::string report_to_json(const EvalReport& report,
                           const std::optional<SweepResult>& sweep = std::nullopt);
std::string report_to_table(const EvalReport& report);

/// Static SVG bar chart of per-class F1 (and AP when present).
std::string report_to_svg(const EvalReport& report);

std::string sweep_to_json(const SweepResult& sweep);

std::string histogram_to_json(const ClassHistogram& hist, const DatasetIndex& index);
std::string histogram_to_table(const ClassHistogram& hist, const DatasetIndex& index);

}  // namespace rdd
