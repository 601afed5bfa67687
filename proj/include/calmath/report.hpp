#pragma once

// Report rendering: a setup x evaluation-set table of MSE/MAD in percent,
// bin CSVs for curve plotting, and SVG reliability/scatter plots.

#include <string>
#include <vector>

#include "calmath/metrics.hpp"

namespace calmath {

struct ReportEntry {
  std::string setup;
  std::string eval_set;
  CalibrationReport report;
};

/// Rows follow the first appearance of each setup, columns the first
/// appearance of each evaluation set. Scores are percentages to one decimal.
std::string format_report_table(const std::vector<ReportEntry>& entries);

/// "setup,eval_set,bin,conf,acc,size" rows.
std::string format_bins_csv(const std::vector<ReportEntry>& entries);

/// Reliability diagram with the diagonal reference; marker area follows bin size.
std::string reliability_svg(const CalibrationBins& bins, const std::string& title);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  bool positive = false;
};

std::string scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title);

/// Lowercase, alphanumerics and '-' only; for file names.
std::string slug(const std::string& name);

}  // namespace calmath
