#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "driftlab/federation.hpp"

namespace driftlab {

// Measured drops along one axis (ratio for CD, severity for CF), per seed
// and aggregated. Relative drops use the same-seed x=0 point as baseline,
// so the origin is exactly zero per seed.
struct DropCurve {
    std::string axis;  // "ratio" | "severity"
    std::vector<double> x;
    std::vector<uint64_t> seeds;
    std::vector<std::vector<double>> per_seed_final;      // [seed][point]
    std::vector<std::vector<double>> per_seed_delta_rel;  // (baseline - v) / baseline
    std::vector<std::vector<double>> per_seed_delta_abs;  // baseline - v
    std::vector<double> mean_final;
    std::vector<double> mean_delta_rel;
    std::vector<double> mean_delta_abs;

    int points() const { return static_cast<int>(x.size()); }
};

// The full CD x CF performance landscape, 11 ratios x 6 severity levels,
// baselined per seed at cell (0,0).
struct LandscapeGrid {
    std::vector<double> ratio_axis;
    std::vector<double> severity_axis;
    std::vector<uint64_t> seeds;
    std::vector<Matrix> per_seed_final;      // [seed] -> ratios x severities
    std::vector<Matrix> per_seed_delta_rel;
    std::vector<Matrix> per_seed_delta_abs;
    Matrix mean_final;
    Matrix mean_delta_rel;
    Matrix mean_delta_abs;

    int ratios() const { return static_cast<int>(ratio_axis.size()); }
    int severities() const { return static_cast<int>(severity_axis.size()); }
};

struct AblationEntry {
    CorruptionKind kind = CorruptionKind::gaussian_noise;
    double cd_drop_rel = 0.0;  // seed-mean relative drop at ratio 1.0
    double cf_drop_rel = 0.0;  // seed-mean relative drop at severity 5
    std::vector<double> per_seed_cd;
    std::vector<double> per_seed_cf;
};

struct AblationResult {
    std::vector<AblationEntry> entries;
};

// Optional per-run observer; receives one line per completed unit of work,
// already ordered by cell id regardless of completion order.
using ProgressFn = std::function<void(const std::string&)>;

struct ExperimentOptions {
    int workers = 1;
    ProgressFn progress;  // may be empty
    bool keep_histories = false;
};

// Per-run training curve, exported as CSV rows (run_id, round, metric).
struct NamedHistory {
    std::string run_id;
    TrainingHistory history;
};

// CD sweep: ratios 0..1 step 0.1, shifted clients at max severity,
// final metric read after rounds_cd.
DropCurve run_cd(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                 const ExperimentOptions& opts = {}, std::vector<NamedHistory>* histories = nullptr);

// CF sweep: clean pretraining for rounds_cd (shared within a seed), then for
// each severity level all clients shifted for rounds_cf.
DropCurve run_cf(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                 const ExperimentOptions& opts = {}, std::vector<NamedHistory>* histories = nullptr);

// Joint landscape: phase 1 trains with ratio-many clients shifted at max
// strength, phase 2 shifts all clients at the cell's severity. The ratio-0
// column is bit-identical to run_cf by stream construction.
LandscapeGrid run_joint(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                        const ExperimentOptions& opts = {},
                        std::vector<NamedHistory>* histories = nullptr);

// Per-kind CD (ratios {0,1}) and CF (levels {0,5}) at reduced round budgets.
AblationResult run_ablation(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                            const std::vector<CorruptionKind>& kinds, int ablation_rounds_cd,
                            int ablation_rounds_cf, const ExperimentOptions& opts = {});

// Internal grid-subset runners, exposed for the ablation path and tests.
DropCurve run_cd_at(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                    const std::vector<int>& ratio_indices, const ExperimentOptions& opts = {},
                    std::vector<NamedHistory>* histories = nullptr);
DropCurve run_cf_at(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                    const std::vector<int>& severity_levels, const ExperimentOptions& opts = {},
                    std::vector<NamedHistory>* histories = nullptr);

// Maximum-strength corruption spec for the configured kind set.
CorruptionSpec max_severity_spec(const FederationConfig& cfg);
// Spec at a discrete severity level for the configured kind set.
CorruptionSpec severity_spec(const FederationConfig& cfg, int level);

}  // namespace driftlab
