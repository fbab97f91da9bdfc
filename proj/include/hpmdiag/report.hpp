#pragma once

#include <string>
#include <vector>

#include "hpmdiag/patterns.hpp"

namespace hpmdiag {

struct ReportOptions {
  bool timestamp = true;  // adds generated_at (JSON) / a "Generated" line (text)
};

// Session summary, derived metrics, findings, caveats.
std::string render_text_report(const PreparedInput& prepared, const std::vector<Finding>& findings,
                               const ReportOptions& options = {});

// The findings schema in docs/report.schema.json.
std::string render_json_report(const PreparedInput& prepared, const std::vector<Finding>& findings,
                               const ReportOptions& options = {});

// "%.6g", or the marker text for missing values.
std::string format_number(double value);

}  // namespace hpmdiag
