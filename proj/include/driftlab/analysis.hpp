#pragma once

#include <span>
#include <string>
#include <vector>

#include "driftlab/experiments.hpp"

namespace driftlab {

struct CorrelationResult {
    double pearson = 0.0;
    double spearman = 0.0;
    double slope = 0.0;      // least-squares slope of delta_cd against delta_cf
    double intercept = 0.0;  // fitted alongside the slope
    int n = 0;
};

struct BumpReport {
    bool found = false;
    int ratio_index = -1;
    int severity_index = -1;
    double ratio = 0.0;
    double severity = 0.0;
    double peak_metric = 0.0;
    double improvement_vs_pure_cd_pct = 0.0;  // vs the same-ratio, severity-0 edge
    double improvement_vs_pure_cf_pct = 0.0;  // vs the ratio-0, same-severity edge
};

// Sample Pearson correlation coefficient. Throws UndefinedCorrelationError
// if either series is constant; requires n >= 3.
double pearson(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation; ties get average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Piecewise-linear interpolation, exact at knots, no extrapolation.
std::vector<double> interpolate_linear(std::span<const double> levels,
                                       std::span<const double> values,
                                       std::span<const double> queries);

// H1 test: normalizes both x-axes to [0,1], resamples the CF curve onto the
// CD curve's grid, then correlates the two seed-mean relative-drop series.
CorrelationResult correlate_cd_cf(const DropCurve& cd, const DropCurve& cf);

// Finds the interior cell with the highest seed-mean metric that beats both
// of its pure-shift edge cells (same-ratio/severity-0 and ratio-0/same-
// severity). Ties break toward smaller ratio, then smaller severity.
BumpReport find_bump(const LandscapeGrid& grid);

}  // namespace driftlab
