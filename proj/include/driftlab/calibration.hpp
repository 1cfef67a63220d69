#pragma once

#include "driftlab/corruptions.hpp"
#include "driftlab/federation.hpp"

namespace driftlab {

// Tunes a continuous severity knob until the clean-converged model's metric
// on corrupted test data drops by target_rel_drop (relative), within tol.
// Binary search over the knob, at most 30 evaluations; assumes the drop is
// monotone in the knob. Throws CalibrationInfeasibleError (carrying the
// maximum achievable drop) when even full severity falls short, and
// ConfigError for kinds without a continuous knob.
CorruptionSpec calibrate_transform(const FedEnv& env, const ModelParams& model,
                                   CorruptionKind kind, double target_rel_drop, double tol);

struct FeasibilityReport {
    double clean_on_clean = 0.0;
    double clean_on_transformed = 0.0;
    double retrained_on_clean = 0.0;
    double retrained_on_transformed = 0.0;
    double drop_after_retrain = 0.0;  // relative clean-test drop after shifted retraining
    bool order_switched = false;
    bool passes = false;
};

// Checks that a transform can emulate forgetting: (a) training the clean-
// converged federation for another full convergence budget on transformed
// data must drop the clean-test metric by at least 5%, and (b) the clean
// model must score higher on clean than transformed data with that ordering
// switched after the shifted training.
FeasibilityReport cf_feasibility_check(const FederationConfig& cfg,
                                       const CorruptionSpec& transform);

}  // namespace driftlab
