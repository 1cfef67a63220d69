#include "driftlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

bool is_constant(std::span<const double> v) {
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] != v[0]) return false;
    return true;
}

void check_series(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("series lengths differ");
    if (x.size() < 3) throw ShapeError("correlation needs at least 3 points");
    if (is_constant(x) || is_constant(y))
        throw UndefinedCorrelationError("correlation undefined for a constant series");
}

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v) {
    size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t p = i; p <= j; ++p) ranks[order[p]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_series(x, y);
    size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedCorrelationError("correlation undefined for a constant series");
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_series(x, y);
    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);
    return pearson(rx, ry);
}

std::vector<double> interpolate_linear(std::span<const double> levels,
                                       std::span<const double> values,
                                       std::span<const double> queries) {
    if (levels.size() != values.size()) throw ShapeError("levels and values lengths differ");
    if (levels.size() < 2) throw ShapeError("interpolation needs at least 2 knots");
    for (size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1]))
            throw InvalidInputError("levels must be strictly increasing");

    std::vector<double> out;
    out.reserve(queries.size());
    for (double q : queries) {
        if (q < levels.front() || q > levels.back())
            throw RangeError("query " + std::to_string(q) + " outside [" +
                             std::to_string(levels.front()) + "," +
                             std::to_string(levels.back()) + "]");
        // exact at knots, including the right endpoint
        size_t hi = 1;
        while (hi + 1 < levels.size() && q > levels[hi]) ++hi;
        double x0 = levels[hi - 1], x1 = levels[hi];
        if (q == x0) {
            out.push_back(values[hi - 1]);
            continue;
        }
        if (q == x1) {
            out.push_back(values[hi]);
            continue;
        }
        double t = (q - x0) / (x1 - x0);
        out.push_back(values[hi - 1] * (1.0 - t) + values[hi] * t);
    }
    return out;
}

CorrelationResult correlate_cd_cf(const DropCurve& cd, const DropCurve& cf) {
    if (cd.axis != "ratio") throw ConfigError("first curve must be on the ratio axis");
    if (cf.axis != "severity") throw ConfigError("second curve must be on the severity axis");
    if (cd.points() < 3 || cf.points() < 2) throw ShapeError("curves too short to correlate");

    auto normalize = [](const std::vector<double>& xs) {
        double max = *std::max_element(xs.begin(), xs.end());
        std::vector<double> out;
        out.reserve(xs.size());
        for (double v : xs) out.push_back(max > 0.0 ? v / max : v);
        return out;
    };
    std::vector<double> cd_x = normalize(cd.x);
    std::vector<double> cf_x = normalize(cf.x);
    std::vector<double> cf_resampled = interpolate_linear(cf_x, cf.mean_delta_rel, cd_x);

    bool cd_zero = is_constant(cd.mean_delta_rel);
    bool cf_zero = is_constant(cf_resampled);
    if (cd_zero || cf_zero)
        throw UndefinedCorrelationError("degenerate drop curves: no variation to correlate");

    CorrelationResult result;
    result.n = cd.points();
    result.pearson = pearson(cf_resampled, cd.mean_delta_rel);
    result.spearman = spearman(cf_resampled, cd.mean_delta_rel);

    // least squares of delta_cd on delta_cf with a free intercept
    size_t n = cf_resampled.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += cf_resampled[i];
        my += cd.mean_delta_rel[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (cf_resampled[i] - mx) * (cd.mean_delta_rel[i] - my);
        sxx += (cf_resampled[i] - mx) * (cf_resampled[i] - mx);
    }
    result.slope = sxy / sxx;
    result.intercept = my - result.slope * mx;
    return result;
}

BumpReport find_bump(const LandscapeGrid& grid) {
    int n_r = grid.ratios();
    int n_s = grid.severities();
    if (n_r < 3 || n_s < 3) throw InvalidInputError("grid too small for interior cells");
    if (grid.mean_final.rows != n_r || grid.mean_final.cols != n_s)
        throw InvalidInputError("grid mean matrix incomplete");
    if (!grid.mean_final.all_finite()) throw InvalidInputError("grid contains non-finite cells");

    BumpReport report;
    for (int r = 1; r < n_r - 1; ++r) {
        for (int s = 1; s < n_s - 1; ++s) {
            double metric = grid.mean_final(r, s);
            double pure_cd = grid.mean_final(r, 0);
            double pure_cf = grid.mean_final(0, s);
            if (!(metric > pure_cd && metric > pure_cf)) continue;
            if (report.found && metric <= report.peak_metric) continue;
            report.found = true;
            report.ratio_index = r;
            report.severity_index = s;
            report.ratio = grid.ratio_axis[static_cast<size_t>(r)];
            report.severity = grid.severity_axis[static_cast<size_t>(s)];
            report.peak_metric = metric;
            report.improvement_vs_pure_cd_pct =
                pure_cd > 0.0 ? (metric - pure_cd) / pure_cd * 100.0 : 0.0;
            report.improvement_vs_pure_cf_pct =
                pure_cf > 0.0 ? (metric - pure_cf) / pure_cf * 100.0 : 0.0;
        }
    }
    return report;
}

}  // namespace driftlab
