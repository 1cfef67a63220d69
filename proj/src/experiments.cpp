#include "driftlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include "driftlab/errors.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr uint64_t kTagInit = 0x696e6970;
constexpr uint64_t kTagPhase1 = 0x70683100;
constexpr uint64_t kTagPhase2 = 0x70683200;

// Streams are keyed by the run seed and a phase tag only. Runs that differ
// just in shift ratio or severity therefore share client sampling and batch
// order, so measured differences come from the shift itself. Cell results
// stay a pure function of (seed, ratio, severity).
uint64_t phase1_key(uint64_t seed) { return derive_key(seed, kTagPhase1); }
uint64_t phase2_key(uint64_t seed) { return derive_key(seed, kTagPhase2); }

// Buffers progress lines and releases them in task order, so output is
// identical at any worker count.
class OrderedReporter {
public:
    explicit OrderedReporter(ProgressFn fn) : fn_(std::move(fn)) {}

    void post(size_t index, std::string line) {
        if (!fn_) return;
        std::lock_guard<std::mutex> lock(mutex_);
        pending_[index] = std::move(line);
        while (!pending_.empty() && pending_.begin()->first == next_) {
            fn_(pending_.begin()->second);
            pending_.erase(pending_.begin());
            ++next_;
        }
    }

private:
    ProgressFn fn_;
    std::mutex mutex_;
    std::map<size_t, std::string> pending_;
    size_t next_ = 0;
};

std::string format_line(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

std::vector<FedEnv> build_envs(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                               int workers) {
    std::vector<FedEnv> envs(seeds.size());
    parallel_for_tasks(static_cast<int>(seeds.size()), workers, [&](int i) {
        FederationConfig c = cfg;
        c.seed = seeds[static_cast<size_t>(i)];
        envs[static_cast<size_t>(i)] = FedEnv::build(c);
    });
    return envs;
}

ModelParams seed_init(const FedEnv& env) {
    return init_params(env.cfg.model_dims(), derive_key(env.cfg.seed, kTagInit));
}

void fill_curve_deltas(DropCurve& curve, int baseline_point) {
    size_t n_seeds = curve.per_seed_final.size();
    int n_points = curve.points();
    curve.per_seed_delta_rel.assign(n_seeds, std::vector<double>(static_cast<size_t>(n_points)));
    curve.per_seed_delta_abs.assign(n_seeds, std::vector<double>(static_cast<size_t>(n_points)));
    curve.mean_final.assign(static_cast<size_t>(n_points), 0.0);
    curve.mean_delta_rel.assign(static_cast<size_t>(n_points), 0.0);
    curve.mean_delta_abs.assign(static_cast<size_t>(n_points), 0.0);
    for (size_t s = 0; s < n_seeds; ++s) {
        double baseline = curve.per_seed_final[s][static_cast<size_t>(baseline_point)];
        for (int p = 0; p < n_points; ++p) {
            double v = curve.per_seed_final[s][static_cast<size_t>(p)];
            double abs_drop = baseline - v;
            curve.per_seed_delta_abs[s][static_cast<size_t>(p)] = abs_drop;
            curve.per_seed_delta_rel[s][static_cast<size_t>(p)] =
                baseline > 0.0 ? abs_drop / baseline : 0.0;
        }
    }
    for (int p = 0; p < n_points; ++p) {
        double mf = 0.0, mr = 0.0, ma = 0.0;
        for (size_t s = 0; s < n_seeds; ++s) {
            mf += curve.per_seed_final[s][static_cast<size_t>(p)];
            mr += curve.per_seed_delta_rel[s][static_cast<size_t>(p)];
            ma += curve.per_seed_delta_abs[s][static_cast<size_t>(p)];
        }
        curve.mean_final[static_cast<size_t>(p)] = mf / static_cast<double>(n_seeds);
        curve.mean_delta_rel[static_cast<size_t>(p)] = mr / static_cast<double>(n_seeds);
        curve.mean_delta_abs[static_cast<size_t>(p)] = ma / static_cast<double>(n_seeds);
    }
}

}  // namespace

CorruptionSpec severity_spec(const FederationConfig& cfg, int level) {
    CorruptionSpec spec;
    spec.kind = cfg.corruption_kinds.front();
    spec.severity_level = level;
    spec.opacity = cfg.occlusion_opacity;
    return spec;
}

CorruptionSpec max_severity_spec(const FederationConfig& cfg) { return severity_spec(cfg, 5); }

DropCurve run_cd_at(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                    const std::vector<int>& ratio_indices, const ExperimentOptions& opts,
                    std::vector<NamedHistory>* histories) {
    cfg.validate();
    if (seeds.empty()) throw ConfigError("need at least one seed");
    if (ratio_indices.empty() || ratio_indices.front() != 0)
        throw ConfigError("CD sweep must include ratio 0 as its baseline");

    std::vector<FedEnv> envs = build_envs(cfg, seeds, opts.workers);

    DropCurve curve;
    curve.axis = "ratio";
    curve.seeds = seeds;
    for (int idx : ratio_indices) curve.x.push_back(static_cast<double>(idx) / 10.0);
    int n_points = curve.points();
    curve.per_seed_final.assign(seeds.size(), std::vector<double>(static_cast<size_t>(n_points)));

    std::vector<NamedHistory> collected(seeds.size() * static_cast<size_t>(n_points));
    OrderedReporter reporter(opts.progress);
    int task_count = static_cast<int>(seeds.size()) * n_points;
    parallel_for_tasks(task_count, opts.workers, [&](int t) {
        int si = t / n_points;
        int pi = t % n_points;
        const FedEnv& env = envs[static_cast<size_t>(si)];
        double ratio = curve.x[static_cast<size_t>(pi)];
        ShiftPlan plan =
            make_shift_plan(ratio, cfg.total_clients, env.cfg.seed, max_severity_spec(cfg));
        FedRunResult run = run_federation(env, plan, cfg.rounds_cd, seed_init(env),
                                          phase1_key(env.cfg.seed));
        curve.per_seed_final[static_cast<size_t>(si)][static_cast<size_t>(pi)] =
            run.history.final_metric();
        if (histories) {
            NamedHistory nh;
            nh.run_id = format_line("cd/seed=%llu/ratio=%.1f",
                                    (unsigned long long)env.cfg.seed, ratio);
            nh.history = std::move(run.history);
            collected[static_cast<size_t>(t)] = std::move(nh);
        }
        reporter.post(static_cast<size_t>(t),
                      format_line("[cd] seed=%llu ratio=%.1f final=%.6f",
                                  (unsigned long long)env.cfg.seed, ratio,
                                  curve.per_seed_final[static_cast<size_t>(si)]
                                                      [static_cast<size_t>(pi)]));
    });
    if (histories)
        for (auto& nh : collected) histories->push_back(std::move(nh));
    fill_curve_deltas(curve, 0);
    return curve;
}

DropCurve run_cd(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                 const ExperimentOptions& opts, std::vector<NamedHistory>* histories) {
    std::vector<int> indices;
    for (int i = 0; i <= 10; ++i) indices.push_back(i);
    return run_cd_at(cfg, seeds, indices, opts, histories);
}

DropCurve run_cf_at(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                    const std::vector<int>& severity_levels, const ExperimentOptions& opts,
                    std::vector<NamedHistory>* histories) {
    cfg.validate();
    if (seeds.empty()) throw ConfigError("need at least one seed");
    if (severity_levels.empty() || severity_levels.front() != 0)
        throw ConfigError("CF sweep must include severity 0 as its baseline");

    std::vector<FedEnv> envs = build_envs(cfg, seeds, opts.workers);

    // Clean pretraining once per seed; the checkpoint is shared across the
    // severity continuations.
    std::vector<FedRunResult> pretrained(seeds.size());
    std::vector<NamedHistory> pre_collected(seeds.size());
    OrderedReporter reporter(opts.progress);
    parallel_for_tasks(static_cast<int>(seeds.size()), opts.workers, [&](int si) {
        const FedEnv& env = envs[static_cast<size_t>(si)];
        ShiftPlan plan =
            make_shift_plan(0.0, cfg.total_clients, env.cfg.seed, max_severity_spec(cfg));
        pretrained[static_cast<size_t>(si)] = run_federation(
            env, plan, cfg.rounds_cd, seed_init(env), phase1_key(env.cfg.seed));
        if (histories) {
            NamedHistory nh;
            nh.run_id = format_line("cf/seed=%llu/pretrain", (unsigned long long)env.cfg.seed);
            nh.history = pretrained[static_cast<size_t>(si)].history;
            pre_collected[static_cast<size_t>(si)] = std::move(nh);
        }
        reporter.post(static_cast<size_t>(si),
                      format_line("[cf] seed=%llu pretrain final=%.6f",
                                  (unsigned long long)env.cfg.seed,
                                  pretrained[static_cast<size_t>(si)].history.final_metric()));
    });

    DropCurve curve;
    curve.axis = "severity";
    curve.seeds = seeds;
    for (int level : severity_levels) curve.x.push_back(static_cast<double>(level));
    int n_points = curve.points();
    curve.per_seed_final.assign(seeds.size(), std::vector<double>(static_cast<size_t>(n_points)));

    std::vector<NamedHistory> collected(seeds.size() * static_cast<size_t>(n_points));
    OrderedReporter cont_reporter(opts.progress);
    int task_count = static_cast<int>(seeds.size()) * n_points;
    parallel_for_tasks(task_count, opts.workers, [&](int t) {
        int si = t / n_points;
        int pi = t % n_points;
        const FedEnv& env = envs[static_cast<size_t>(si)];
        int level = severity_levels[static_cast<size_t>(pi)];
        ShiftPlan plan =
            make_shift_plan(1.0, cfg.total_clients, env.cfg.seed, severity_spec(cfg, level));
        FedRunResult run =
            run_federation(env, plan, cfg.rounds_cf,
                           pretrained[static_cast<size_t>(si)].params, phase2_key(env.cfg.seed));
        curve.per_seed_final[static_cast<size_t>(si)][static_cast<size_t>(pi)] =
            run.history.final_metric();
        if (histories) {
            NamedHistory nh;
            nh.run_id = format_line("cf/seed=%llu/severity=%d",
                                    (unsigned long long)env.cfg.seed, level);
            nh.history = std::move(run.history);
            collected[static_cast<size_t>(t)] = std::move(nh);
        }
        cont_reporter.post(static_cast<size_t>(t),
                           format_line("[cf] seed=%llu severity=%d final=%.6f",
                                       (unsigned long long)env.cfg.seed, level,
                                       curve.per_seed_final[static_cast<size_t>(si)]
                                                           [static_cast<size_t>(pi)]));
    });
    if (histories) {
        for (auto& nh : pre_collected) histories->push_back(std::move(nh));
        for (auto& nh : collected) histories->push_back(std::move(nh));
    }
    fill_curve_deltas(curve, 0);
    return curve;
}

DropCurve run_cf(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                 const ExperimentOptions& opts, std::vector<NamedHistory>* histories) {
    return run_cf_at(cfg, seeds, {0, 1, 2, 3, 4, 5}, opts, histories);
}

LandscapeGrid run_joint(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                        const ExperimentOptions& opts, std::vector<NamedHistory>* histories) {
    cfg.validate();
    if (seeds.empty()) throw ConfigError("need at least one seed");

    std::vector<FedEnv> envs = build_envs(cfg, seeds, opts.workers);

    LandscapeGrid grid;
    for (int i = 0; i <= 10; ++i) grid.ratio_axis.push_back(static_cast<double>(i) / 10.0);
    for (int l = 0; l <= 5; ++l) grid.severity_axis.push_back(static_cast<double>(l));
    grid.seeds = seeds;
    int n_r = grid.ratios();
    int n_s = grid.severities();
    grid.per_seed_final.assign(seeds.size(), Matrix(n_r, n_s));

    // Phase 1: one checkpoint per (seed, ratio). Reused by all severities,
    // which leaves the results untouched because the phase-2 stream does not
    // depend on how the checkpoint was produced.
    std::vector<FedRunResult> checkpoints(seeds.size() * static_cast<size_t>(n_r));
    std::vector<NamedHistory> p1_collected(checkpoints.size());
    OrderedReporter p1_reporter(opts.progress);
    int p1_count = static_cast<int>(seeds.size()) * n_r;
    parallel_for_tasks(p1_count, opts.workers, [&](int t) {
        int si = t / n_r;
        int ri = t % n_r;
        const FedEnv& env = envs[static_cast<size_t>(si)];
        double ratio = grid.ratio_axis[static_cast<size_t>(ri)];
        ShiftPlan plan =
            make_shift_plan(ratio, cfg.total_clients, env.cfg.seed, max_severity_spec(cfg));
        checkpoints[static_cast<size_t>(t)] = run_federation(
            env, plan, cfg.rounds_cd, seed_init(env), phase1_key(env.cfg.seed));
        if (histories) {
            NamedHistory nh;
            nh.run_id = format_line("joint/seed=%llu/ratio=%.1f/phase1",
                                    (unsigned long long)env.cfg.seed, ratio);
            nh.history = checkpoints[static_cast<size_t>(t)].history;
            p1_collected[static_cast<size_t>(t)] = std::move(nh);
        }
        p1_reporter.post(static_cast<size_t>(t),
                         format_line("[joint] seed=%llu ratio=%.1f phase1 final=%.6f",
                                     (unsigned long long)env.cfg.seed, ratio,
                                     checkpoints[static_cast<size_t>(t)].history.final_metric()));
    });

    std::vector<NamedHistory> p2_collected(seeds.size() * static_cast<size_t>(n_r) *
                                           static_cast<size_t>(n_s));
    OrderedReporter p2_reporter(opts.progress);
    int cell_count = static_cast<int>(seeds.size()) * n_r * n_s;
    int completed_cells = 0;
    std::mutex completed_mutex;
    try {
        parallel_for_tasks(cell_count, opts.workers, [&](int t) {
            int si = t / (n_r * n_s);
            int ri = (t / n_s) % n_r;
            int li = t % n_s;
            const FedEnv& env = envs[static_cast<size_t>(si)];
            ShiftPlan plan = make_shift_plan(1.0, cfg.total_clients, env.cfg.seed,
                                             severity_spec(cfg, li));
            const FedRunResult& checkpoint =
                checkpoints[static_cast<size_t>(si) * n_r + static_cast<size_t>(ri)];
            FedRunResult run = run_federation(env, plan, cfg.rounds_cf, checkpoint.params,
                                              phase2_key(env.cfg.seed));
            grid.per_seed_final[static_cast<size_t>(si)](ri, li) = run.history.final_metric();
            if (histories) {
                NamedHistory nh;
                nh.run_id = format_line("joint/seed=%llu/ratio=%.1f/severity=%d",
                                        (unsigned long long)env.cfg.seed,
                                        grid.ratio_axis[static_cast<size_t>(ri)], li);
                nh.history = std::move(run.history);
                p2_collected[static_cast<size_t>(t)] = std::move(nh);
            }
            p2_reporter.post(static_cast<size_t>(t),
                             format_line("[joint] seed=%llu ratio=%.1f severity=%d final=%.6f",
                                         (unsigned long long)env.cfg.seed,
                                         grid.ratio_axis[static_cast<size_t>(ri)], li,
                                         grid.per_seed_final[static_cast<size_t>(si)](ri, li)));
            std::lock_guard<std::mutex> lock(completed_mutex);
            ++completed_cells;
        });
    } catch (const Error& e) {
        throw Error(std::string(e.what()) + " (grid aborted after " +
                    std::to_string(completed_cells) + " of " + std::to_string(cell_count) +
                    " completed cells; no partial grid emitted)");
    }
    if (histories) {
        for (auto& nh : p1_collected) histories->push_back(std::move(nh));
        for (auto& nh : p2_collected) histories->push_back(std::move(nh));
    }

    grid.per_seed_delta_rel.assign(seeds.size(), Matrix(n_r, n_s));
    grid.per_seed_delta_abs.assign(seeds.size(), Matrix(n_r, n_s));
    grid.mean_final = Matrix(n_r, n_s);
    grid.mean_delta_rel = Matrix(n_r, n_s);
    grid.mean_delta_abs = Matrix(n_r, n_s);
    for (size_t s = 0; s < seeds.size(); ++s) {
        double baseline = grid.per_seed_final[s](0, 0);
        for (int r = 0; r < n_r; ++r)
            for (int l = 0; l < n_s; ++l) {
                double v = grid.per_seed_final[s](r, l);
                grid.per_seed_delta_abs[s](r, l) = baseline - v;
                grid.per_seed_delta_rel[s](r, l) =
                    baseline > 0.0 ? (baseline - v) / baseline : 0.0;
            }
    }
    double inv = 1.0 / static_cast<double>(seeds.size());
    for (int r = 0; r < n_r; ++r)
        for (int l = 0; l < n_s; ++l) {
            double mf = 0.0, mr = 0.0, ma = 0.0;
            for (size_t s = 0; s < seeds.size(); ++s) {
                mf += grid.per_seed_final[s](r, l);
                mr += grid.per_seed_delta_rel[s](r, l);
                ma += grid.per_seed_delta_abs[s](r, l);
            }
            grid.mean_final(r, l) = mf * inv;
            grid.mean_delta_rel(r, l) = mr * inv;
            grid.mean_delta_abs(r, l) = ma * inv;
        }
    return grid;
}

AblationResult run_ablation(const FederationConfig& cfg, const std::vector<uint64_t>& seeds,
                            const std::vector<CorruptionKind>& kinds, int ablation_rounds_cd,
                            int ablation_rounds_cf, const ExperimentOptions& opts) {
    if (kinds.empty()) throw ConfigError("ablation needs at least one corruption kind");
    AblationResult result;
    for (CorruptionKind kind : kinds) {
        FederationConfig sub = cfg;
        sub.corruption_kinds = {kind};
        sub.rounds_cd = ablation_rounds_cd;
        sub.rounds_cf = ablation_rounds_cf;
        DropCurve cd = run_cd_at(sub, seeds, {0, 10}, opts);
        DropCurve cf = run_cf_at(sub, seeds, {0, 5}, opts);
        AblationEntry entry;
        entry.kind = kind;
        entry.cd_drop_rel = cd.mean_delta_rel.back();
        entry.cf_drop_rel = cf.mean_delta_rel.back();
        for (size_t s = 0; s < seeds.size(); ++s) {
            entry.per_seed_cd.push_back(cd.per_seed_delta_rel[s].back());
            entry.per_seed_cf.push_back(cf.per_seed_delta_rel[s].back());
        }
        result.entries.push_back(std::move(entry));
    }
    return result;
}

}  // namespace driftlab
