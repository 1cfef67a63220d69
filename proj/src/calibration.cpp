#include "driftlab/calibration.hpp"

#include <cmath>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr uint64_t kTagInit = 0x696e6970;
constexpr uint64_t kTagPhase1 = 0x70683100;
constexpr uint64_t kTagRetrain = 0x72747261;

double relative_drop(double baseline, double value) {
    return baseline > 0.0 ? (baseline - value) / baseline : 0.0;
}

}  // namespace

CorruptionSpec calibrate_transform(const FedEnv& env, const ModelParams& model,
                                   CorruptionKind kind, double target_rel_drop, double tol) {
    if (!has_continuous_severity(kind))
        throw ConfigError(std::string(corruption_kind_name(kind)) +
                          " has no continuous severity knob to calibrate");
    if (target_rel_drop < 0.0 || target_rel_drop >= 1.0)
        throw ConfigError("target_rel_drop must be in [0,1)");
    if (tol <= 0.0) throw ConfigError("tol must be positive");

    auto spec_at = [&](double knob) {
        CorruptionSpec spec;
        spec.kind = kind;
        spec.coverage = knob;
        spec.opacity = env.cfg.occlusion_opacity;
        spec.rng_salt = env.corruption_salt;
        return spec;
    };
    if (target_rel_drop == 0.0) return spec_at(0.0);

    double clean = evaluate(env, model);
    auto drop_at = [&](double knob) {
        return relative_drop(clean, evaluate_corrupted(env, model, spec_at(knob)));
    };

    double max_drop = drop_at(1.0);
    if (max_drop < target_rel_drop - tol)
        throw CalibrationInfeasibleError(
            std::string("calibration infeasible for ") + corruption_kind_name(kind) +
                ": maximum achievable drop " + std::to_string(max_drop) + " is below target " +
                std::to_string(target_rel_drop),
            max_drop);
    if (std::abs(max_drop - target_rel_drop) <= tol) return spec_at(1.0);

    double lo = 0.0, hi = 1.0;
    double best_knob = 1.0;
    double best_gap = std::abs(max_drop - target_rel_drop);
    for (int iter = 0; iter < 30; ++iter) {
        double mid = 0.5 * (lo + hi);
        double drop = drop_at(mid);
        double gap = std::abs(drop - target_rel_drop);
        if (gap < best_gap) {
            best_gap = gap;
            best_knob = mid;
        }
        if (gap <= tol) return spec_at(mid);
        if (drop < target_rel_drop)
            lo = mid;
        else
            hi = mid;
    }
    return spec_at(best_knob);
}

FeasibilityReport cf_feasibility_check(const FederationConfig& cfg,
                                       const CorruptionSpec& transform) {
    transform.validate();
    FedEnv env = FedEnv::build(cfg);
    ModelParams init = init_params(cfg.model_dims(), derive_key(cfg.seed, kTagInit));

    ShiftPlan clean_plan = make_shift_plan(0.0, cfg.total_clients, cfg.seed, transform);
    FedRunResult pretrained = run_federation(env, clean_plan, cfg.rounds_cd, std::move(init),
                                             derive_key(cfg.seed, kTagPhase1));

    FeasibilityReport report;
    report.clean_on_clean = evaluate(env, pretrained.params);
    report.clean_on_transformed = evaluate_corrupted(env, pretrained.params, transform);

    // Shifted retraining uses the full convergence budget, not the shorter
    // CF continuation.
    ShiftPlan shifted_plan = make_shift_plan(1.0, cfg.total_clients, cfg.seed, transform);
    FedRunResult retrained = run_federation(env, shifted_plan, cfg.rounds_cd, pretrained.params,
                                            derive_key(cfg.seed, kTagRetrain));
    report.retrained_on_clean = evaluate(env, retrained.params);
    report.retrained_on_transformed = evaluate_corrupted(env, retrained.params, transform);

    report.drop_after_retrain = relative_drop(report.clean_on_clean, report.retrained_on_clean);
    report.order_switched = report.clean_on_clean > report.clean_on_transformed &&
                            report.retrained_on_transformed > report.retrained_on_clean;
    report.passes = report.drop_after_retrain >= 0.05 && report.order_switched;
    return report;
}

}  // namespace driftlab
