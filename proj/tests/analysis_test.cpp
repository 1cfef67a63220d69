#include <doctest.h>

#include <cmath>

#include "driftlab/analysis.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"
#include "test_util.hpp"

using namespace driftlab;

namespace {

// Brute-force references, deliberately different routes from the library:
// textbook two-pass Pearson and O(n^2) counting ranks for Spearman.
double pearson_reference(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    double num = n * sxy - sx * sy;
    double den = std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy);
    return num / den;
}

std::vector<double> ranks_reference(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        size_t less = 0, equal = 0;
        for (size_t j = 0; j < v.size(); ++j) {
            less += v[j] < v[i];
            equal += v[j] == v[i];
        }
        ranks[i] = static_cast<double>(less) + 0.5 * static_cast<double>(equal - 1) + 1.0;
    }
    return ranks;
}

double spearman_reference(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_reference(ranks_reference(x), ranks_reference(y));
}

DropCurve synthetic_curve(const std::string& axis, std::vector<double> x,
                          std::vector<double> mean_delta) {
    DropCurve c;
    c.axis = axis;
    c.x = std::move(x);
    c.seeds = {1};
    c.mean_delta_rel = std::move(mean_delta);
    c.per_seed_delta_rel = {c.mean_delta_rel};
    c.per_seed_final.assign(1, std::vector<double>(c.x.size(), 0.9));
    c.per_seed_delta_abs = c.per_seed_delta_rel;
    c.mean_delta_abs = c.mean_delta_rel;
    c.mean_final.assign(c.x.size(), 0.9);
    return c;
}

LandscapeGrid uniform_grid(double metric) {
    LandscapeGrid grid;
    for (int i = 0; i <= 10; ++i) grid.ratio_axis.push_back(i / 10.0);
    for (int l = 0; l <= 5; ++l) grid.severity_axis.push_back(static_cast<double>(l));
    grid.seeds = {1};
    grid.mean_final = Matrix(11, 6, metric);
    grid.per_seed_final = {grid.mean_final};
    grid.mean_delta_rel = Matrix(11, 6, 0.0);
    grid.mean_delta_abs = Matrix(11, 6, 0.0);
    grid.per_seed_delta_rel = {grid.mean_delta_rel};
    grid.per_seed_delta_abs = {grid.mean_delta_abs};
    return grid;
}

}  // namespace

TEST_CASE("pearson examples") {
    std::vector<double> x = {0, 1, 2};
    std::vector<double> y_pos = {0, 2, 4};
    std::vector<double> y_neg = {4, 2, 0};
    CHECK(pearson(x, y_pos) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(x, y_neg) == doctest::Approx(-1.0).epsilon(1e-12));

    std::vector<double> a = {1, 2, 3};
    std::vector<double> b = {1, 2, 4};
    CHECK(pearson(a, b) == doctest::Approx(0.98198).epsilon(1e-5));
    CHECK(pearson(a, b) == pearson(b, a));

    std::vector<double> flat = {2, 2, 2};
    CHECK_THROWS_AS(pearson(x, flat), UndefinedCorrelationError);
    std::vector<double> two = {1, 2};
    CHECK_THROWS_AS(pearson(two, two), ShapeError);
}

TEST_CASE("spearman examples and rank handling") {
    std::vector<double> x = {1, 2, 3};
    std::vector<double> inc = {10, 20, 80};
    CHECK(spearman(x, inc) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> y = {3, 1, 2};
    CHECK(spearman(x, y) == doctest::Approx(-0.5).epsilon(1e-12));  // 1 - 6*6/(3*8)

    // monotone-transform invariance
    std::vector<double> exp_inc = {std::exp(10.0), std::exp(20.0), std::exp(80.0)};
    CHECK(spearman(x, exp_inc) == spearman(x, inc));
}

TEST_CASE("pearson and spearman match brute-force references on random vectors") {
    Rng rng(20240) ;
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n = 5 + rng.next_below(40);
        std::vector<double> x(n), y(n);
        bool with_ties = trial % 3 == 0;
        for (size_t i = 0; i < n; ++i) {
            if (with_ties) {
                x[i] = static_cast<double>(rng.next_below(6));
                y[i] = static_cast<double>(rng.next_below(6));
            } else {
                x[i] = rng.next_range(-5.0, 5.0);
                y[i] = rng.next_range(-5.0, 5.0);
            }
        }
        bool x_const = true, y_const = true;
        for (size_t i = 1; i < n; ++i) {
            x_const &= x[i] == x[0];
            y_const &= y[i] == y[0];
        }
        if (x_const || y_const) continue;
        CHECK(pearson(x, y) == doctest::Approx(pearson_reference(x, y)).epsilon(1e-12));
        CHECK(spearman(x, y) == doctest::Approx(spearman_reference(x, y)).epsilon(1e-12));
        CHECK(pearson(x, y) >= -1.0 - 1e-12);
        CHECK(pearson(x, y) <= 1.0 + 1e-12);
    }
}

TEST_CASE("pearson is invariant under positive affine transforms") {
    Rng rng(5150);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 8 + rng.next_below(20);
        std::vector<double> x(n), y(n), x_aff(n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = rng.next_range(-2.0, 2.0);
            y[i] = rng.next_range(-2.0, 2.0);
        }
        double a = rng.next_range(0.1, 4.0);
        double b = rng.next_range(-3.0, 3.0);
        for (size_t i = 0; i < n; ++i) x_aff[i] = a * x[i] + b;
        CHECK(pearson(x_aff, y) == doctest::Approx(pearson(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("interpolate_linear examples") {
    std::vector<double> levels = {1, 2, 4};
    std::vector<double> values = {0, 2, 2};
    std::vector<double> knots = {1, 2, 4};
    CHECK(interpolate_linear(levels, values, knots) == values);  // exact at knots

    std::vector<double> mid = {3};
    CHECK(interpolate_linear(levels, values, mid)[0] == doctest::Approx(2.0).epsilon(1e-15));

    std::vector<double> two_levels = {1, 5};
    std::vector<double> two_values = {0, 8};
    std::vector<double> q = {3};
    CHECK(interpolate_linear(two_levels, two_values, q)[0] == doctest::Approx(4.0));

    std::vector<double> out_of_range = {0.5};
    CHECK_THROWS_AS(interpolate_linear(levels, values, out_of_range), RangeError);
    std::vector<double> above = {4.5};
    CHECK_THROWS_AS(interpolate_linear(levels, values, above), RangeError);
    std::vector<double> not_increasing = {1, 1, 4};
    CHECK_THROWS_AS(interpolate_linear(not_increasing, values, mid), InvalidInputError);
}

TEST_CASE("correlate_cd_cf identities") {
    std::vector<double> ratio_x, deltas;
    for (int i = 0; i <= 10; ++i) {
        ratio_x.push_back(i / 10.0);
        deltas.push_back(0.01 * i);
    }
    std::vector<double> sev_x = {0, 1, 2, 3, 4, 5};
    std::vector<double> cf_same(6), cf_double(6);
    for (int l = 0; l <= 5; ++l) {
        cf_same[(size_t)l] = 0.01 * (l * 10.0 / 5.0);    // equals cd after normalization
        cf_double[(size_t)l] = 0.02 * (l * 10.0 / 5.0);  // 2x cd
    }

    DropCurve cd = synthetic_curve("ratio", ratio_x, deltas);
    DropCurve cf = synthetic_curve("severity", sev_x, cf_same);
    CorrelationResult same = correlate_cd_cf(cd, cf);
    CHECK(same.pearson == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.spearman == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.n == 11);

    DropCurve cf2 = synthetic_curve("severity", sev_x, cf_double);
    CorrelationResult halved = correlate_cd_cf(cd, cf2);
    CHECK(halved.pearson == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(halved.slope == doctest::Approx(0.5).epsilon(1e-12));

    // slope sign equals pearson sign
    std::vector<double> falling(11);
    for (int i = 0; i <= 10; ++i) falling[(size_t)i] = -0.01 * i;
    DropCurve cd_fall = synthetic_curve("ratio", ratio_x, falling);
    CorrelationResult neg = correlate_cd_cf(cd_fall, cf);
    CHECK(neg.pearson < 0.0);
    CHECK(neg.slope < 0.0);

    DropCurve flat = synthetic_curve("severity", sev_x, std::vector<double>(6, 0.0));
    CHECK_THROWS_AS(correlate_cd_cf(cd, flat), UndefinedCorrelationError);
    CHECK_THROWS_AS(correlate_cd_cf(cf, cd), ConfigError);  // wrong axes
}

TEST_CASE("find_bump fixtures") {
    SUBCASE("all-zero delta grid has no bump") {
        LandscapeGrid grid = uniform_grid(0.9);
        CHECK_FALSE(find_bump(grid).found);
    }
    SUBCASE("planted interior peak is found with hand-computed improvements") {
        LandscapeGrid grid = uniform_grid(0.90);
        grid.mean_final(4, 2) = 0.91;
        BumpReport report = find_bump(grid);
        REQUIRE(report.found);
        CHECK(report.ratio_index == 4);
        CHECK(report.severity_index == 2);
        CHECK(report.ratio == doctest::Approx(0.4));
        CHECK(report.severity == doctest::Approx(2.0));
        CHECK(report.peak_metric == doctest::Approx(0.91));
        CHECK(report.improvement_vs_pure_cd_pct == doctest::Approx(100.0 * 0.01 / 0.90));
        CHECK(report.improvement_vs_pure_cf_pct == doctest::Approx(100.0 * 0.01 / 0.90));
    }
    SUBCASE("edge cells never win") {
        LandscapeGrid grid = uniform_grid(0.90);
        grid.mean_final(0, 3) = 0.99;   // pure CF edge
        grid.mean_final(10, 2) = 0.99;  // full-ratio edge
        grid.mean_final(4, 5) = 0.99;   // max-severity edge
        CHECK_FALSE(find_bump(grid).found);
    }
    SUBCASE("monotone grids have no bump") {
        LandscapeGrid grid = uniform_grid(0.0);
        for (int r = 0; r <= 10; ++r)
            for (int l = 0; l <= 5; ++l) grid.mean_final(r, l) = 1.0 - 0.02 * r - 0.03 * l;
        CHECK_FALSE(find_bump(grid).found);
    }
    SUBCASE("ties break toward smaller ratio then severity") {
        LandscapeGrid grid = uniform_grid(0.90);
        grid.mean_final(3, 2) = 0.95;
        grid.mean_final(5, 3) = 0.95;
        BumpReport report = find_bump(grid);
        REQUIRE(report.found);
        CHECK(report.ratio_index == 3);
        CHECK(report.severity_index == 2);
    }
    SUBCASE("incomplete grid rejected") {
        LandscapeGrid grid = uniform_grid(0.9);
        grid.mean_final = Matrix(4, 6, 0.9);
        CHECK_THROWS_AS(find_bump(grid), InvalidInputError);
        LandscapeGrid nan_grid = uniform_grid(0.9);
        nan_grid.mean_final(2, 2) = std::nan("");
        CHECK_THROWS_AS(find_bump(nan_grid), InvalidInputError);
    }
}
