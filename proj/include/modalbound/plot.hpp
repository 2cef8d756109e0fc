#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "modalbound/errors.hpp"

namespace modalbound {

enum class PlotKind { decay, bound_gap, risk_vs_modalities };

PlotKind parse_plot_kind(std::string_view text);  // ConfigError when unknown

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double stderr_y = 0.0;
  int count = 0;
};

// Aggregates sweep rows over trials:
//   decay               (log n, log mean rad_mc), stderr by the delta method
//   bound-gap           (n, mean t3_rhs - t3_lhs)
//   risk-vs-modalities  (|M|, mean pop_risk_M)
// Rows with NaN in the used columns are skipped. Throws PreconditionError
// "no rows" when nothing is left.
std::vector<PlotPoint> plot_points(const std::string& csv_text, PlotKind kind);

std::string plot_tsv(const std::vector<PlotPoint>& points);

// Least-squares slope of y on x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace modalbound
