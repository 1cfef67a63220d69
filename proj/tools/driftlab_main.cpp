#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "driftlab/analysis.hpp"
#include "driftlab/calibration.hpp"
#include "driftlab/config.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/experiments.hpp"
#include "driftlab/io.hpp"
#include "driftlab/version.hpp"

namespace {

using namespace driftlab;

struct CommonFlags {
    std::string config_path;
    std::string seeds;
    std::string out_dir;
    std::string kinds;
    int workers = -1;
    double rehearsal = -1.0;
    bool histories = false;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "config file (sectioned key=value)");
    sub->add_option("--seeds", flags.seeds, "comma-separated seed list");
    sub->add_option("--out", flags.out_dir, "output directory");
    sub->add_option("--workers", flags.workers, "parallel worker count");
    sub->add_option("--rehearsal", flags.rehearsal, "clean rehearsal fraction in [0,1)");
    sub->add_option("--kinds", flags.kinds, "comma-separated corruption kinds");
    sub->add_flag("--histories", flags.histories, "also write per-round training histories");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig cfg =
        flags.config_path.empty() ? default_run_config() : load_config_file(flags.config_path);
    if (!flags.seeds.empty()) cfg.seeds = parse_seed_list(flags.seeds);
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (!flags.kinds.empty()) cfg.fed.corruption_kinds = parse_kind_list(flags.kinds);
    if (flags.rehearsal >= 0.0) cfg.fed.rehearsal_fraction = flags.rehearsal;
    if (flags.workers > 0) {
        cfg.workers = flags.workers;
    } else if (const char* env = std::getenv("DRIFT_WORKERS")) {
        cfg.workers = std::max(1, std::atoi(env));
    }
    if (flags.histories) cfg.write_histories = true;
    cfg.validate();
    return cfg;
}

ExperimentOptions options_for(const RunConfig& cfg) {
    ExperimentOptions opts;
    opts.workers = cfg.workers;
    opts.progress = [](const std::string& line) { std::cout << line << "\n"; };
    return opts;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/" + name;
}

int run_curve_experiment(const CommonFlags& flags, const std::string& name) {
    RunConfig cfg = resolve_config(flags);
    ExperimentOptions opts = options_for(cfg);
    std::vector<NamedHistory> histories;
    DropCurve curve = name == "cd"
                          ? run_cd(cfg.fed, cfg.seeds, opts,
                                   cfg.write_histories ? &histories : nullptr)
                          : run_cf(cfg.fed, cfg.seeds, opts,
                                   cfg.write_histories ? &histories : nullptr);
    std::string metric = cfg.fed.task == TaskKind::classification ? "accuracy" : "dice";
    write_file(out_path(cfg, name + ".csv"), curve_to_csv(name, curve));
    write_file(out_path(cfg, name + ".json"),
               curve_to_json(name, metric, curve, config_to_json(cfg)));
    if (cfg.write_histories)
        write_file(out_path(cfg, name + "_histories.csv"), histories_to_csv(histories));
    std::cout << "wrote " << out_path(cfg, name + ".csv") << " and " << out_path(cfg, name + ".json")
              << "\n";
    return 0;
}

int run_joint_experiment(const CommonFlags& flags) {
    RunConfig cfg = resolve_config(flags);
    ExperimentOptions opts = options_for(cfg);
    std::vector<NamedHistory> histories;
    LandscapeGrid grid =
        run_joint(cfg.fed, cfg.seeds, opts, cfg.write_histories ? &histories : nullptr);
    std::string metric = cfg.fed.task == TaskKind::classification ? "accuracy" : "dice";
    write_file(out_path(cfg, "grid.csv"), grid_to_csv("joint", grid));
    export_landscape(grid, out_path(cfg, "grid.json"), out_path(cfg, "landscape.csv"), metric,
                     config_to_json(cfg));
    if (cfg.write_histories)
        write_file(out_path(cfg, "grid_histories.csv"), histories_to_csv(histories));
    std::cout << "wrote " << out_path(cfg, "grid.csv") << ", " << out_path(cfg, "grid.json")
              << " and " << out_path(cfg, "landscape.csv") << "\n";
    return 0;
}

int run_ablation_experiment(const CommonFlags& flags) {
    RunConfig cfg = resolve_config(flags);
    ExperimentOptions opts = options_for(cfg);
    AblationResult result = run_ablation(cfg.fed, cfg.seeds, cfg.fed.corruption_kinds,
                                         cfg.ablation_rounds_cd, cfg.ablation_rounds_cf, opts);
    write_file(out_path(cfg, "ablation.csv"), ablation_to_csv(result, cfg.seeds));
    write_file(out_path(cfg, "ablation.json"),
               ablation_to_json(result, cfg.seeds, config_to_json(cfg)));
    for (const AblationEntry& e : result.entries)
        std::cout << corruption_kind_name(e.kind) << ": cd_drop=" << format_double(e.cd_drop_rel)
                  << " cf_drop=" << format_double(e.cf_drop_rel) << "\n";
    return 0;
}

int run_calibrate(const CommonFlags& flags, const std::string& kind_name, double target,
                  double tol) {
    RunConfig cfg = resolve_config(flags);
    CorruptionKind kind = kind_name.empty() ? cfg.fed.corruption_kinds.front()
                                            : corruption_kind_from_name(kind_name);
    FederationConfig fed = cfg.fed;
    fed.seed = cfg.seeds.front();

    std::cout << "training clean federation (" << fed.rounds_cd << " rounds, seed " << fed.seed
              << ")...\n";
    FedEnv env = FedEnv::build(fed);
    ModelParams model = init_params(fed.model_dims(), derive_key(fed.seed, 0x696e6970u));
    ShiftPlan clean_plan = make_shift_plan(0.0, fed.total_clients, fed.seed, severity_spec(fed, 0));
    FedRunResult pretrained = run_federation(env, clean_plan, fed.rounds_cd, std::move(model),
                                             derive_key(fed.seed, 0x70683100u));
    std::cout << "clean test metric: " << format_double(evaluate(env, pretrained.params)) << "\n";

    CorruptionSpec spec = calibrate_transform(env, pretrained.params, kind, target, tol);
    double clean = evaluate(env, pretrained.params);
    double corrupted = evaluate_corrupted(env, pretrained.params, spec);
    double measured = clean > 0.0 ? (clean - corrupted) / clean : 0.0;
    std::cout << "calibrated " << corruption_kind_name(kind)
              << ": knob=" << format_double(spec.coverage)
              << " measured_drop=" << format_double(measured) << "\n";

    FeasibilityReport report = cf_feasibility_check(fed, spec);
    std::cout << feasibility_to_json(&spec, measured, report, config_to_json(cfg));
    return 0;
}

int run_analyze(const CommonFlags& flags, const std::string& cd_path, const std::string& cf_path,
                const std::string& grid_path) {
    RunConfig cfg = resolve_config(flags);
    CorrelationResult correlation;
    bool have_correlation = false;
    if (!cd_path.empty() && !cf_path.empty()) {
        DropCurve cd = curve_from_csv_rows(parse_experiment_csv(cd_path));
        DropCurve cf = curve_from_csv_rows(parse_experiment_csv(cf_path));
        correlation = correlate_cd_cf(cd, cf);
        have_correlation = true;
        std::cout << "pearson=" << format_double(correlation.pearson)
                  << " spearman=" << format_double(correlation.spearman)
                  << " slope=" << format_double(correlation.slope) << "\n";
    }
    BumpReport bump;
    bool have_bump = false;
    if (!grid_path.empty()) {
        LandscapeGrid grid = grid_from_json(read_file(grid_path));
        bump = find_bump(grid);
        have_bump = true;
        if (bump.found)
            std::cout << "bump at ratio=" << format_double(bump.ratio)
                      << " severity=" << format_double(bump.severity)
                      << " (+" << format_double(bump.improvement_vs_pure_cd_pct) << "% vs CD, +"
                      << format_double(bump.improvement_vs_pure_cf_pct) << "% vs CF)\n";
        else
            std::cout << "no generalization bump found\n";
    }
    if (!have_correlation && !have_bump)
        throw ConfigError("analyze needs --cd and --cf (and/or --grid)");
    write_file(out_path(cfg, "analysis.json"),
               analysis_to_json(have_correlation ? &correlation : nullptr,
                                have_bump ? &bump : nullptr, config_to_json(cfg)));
    std::cout << "wrote " << out_path(cfg, "analysis.json") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolName) + " " + kToolVersion +
                 " — desk-scale joint analysis of client drift and catastrophic forgetting"};
    app.require_subcommand(0, 1);

    bool dump_defaults = false;
    app.add_flag("--dump-defaults", dump_defaults, "print the default config and exit");

    CommonFlags cd_flags, cf_flags, joint_flags, ablation_flags, calibrate_flags, analyze_flags;

    CLI::App* cd = app.add_subcommand("cd", "client-drift sweep over shifted-client ratios");
    add_common(cd, cd_flags);
    CLI::App* cf = app.add_subcommand("cf", "catastrophic-forgetting sweep over severity levels");
    add_common(cf, cf_flags);
    CLI::App* joint = app.add_subcommand("joint", "full CD x CF landscape grid");
    add_common(joint, joint_flags);
    CLI::App* ablation = app.add_subcommand("ablation", "per-kind CD/CF drops at full strength");
    add_common(ablation, ablation_flags);

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "tune a transform to a target drop and check feasibility");
    add_common(calibrate, calibrate_flags);
    std::string calibrate_kind;
    double calibrate_target = 0.2;
    double calibrate_tol = 0.02;
    calibrate->add_option("--kind", calibrate_kind, "corruption kind to calibrate");
    calibrate->add_option("--target", calibrate_target, "target relative drop (default 0.2)");
    calibrate->add_option("--tol", calibrate_tol, "tolerance around the target (default 0.02)");

    CLI::App* analyze = app.add_subcommand("analyze", "correlate CD/CF curves and find the bump");
    add_common(analyze, analyze_flags);
    std::string analyze_cd, analyze_cf, analyze_grid;
    analyze->add_option("--cd", analyze_cd, "cd.csv written by the cd subcommand");
    analyze->add_option("--cf", analyze_cf, "cf.csv written by the cf subcommand");
    analyze->add_option("--grid", analyze_grid, "grid.json written by the joint subcommand");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (dump_defaults) {
            std::cout << dump_config(default_run_config());
            return 0;
        }
        if (cd->parsed()) return run_curve_experiment(cd_flags, "cd");
        if (cf->parsed()) return run_curve_experiment(cf_flags, "cf");
        if (joint->parsed()) return run_joint_experiment(joint_flags);
        if (ablation->parsed()) return run_ablation_experiment(ablation_flags);
        if (calibrate->parsed())
            return run_calibrate(calibrate_flags, calibrate_kind, calibrate_target, calibrate_tol);
        if (analyze->parsed())
            return run_analyze(analyze_flags, analyze_cd, analyze_cf, analyze_grid);
        std::cout << app.help();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CalibrationInfeasibleError& e) {
        std::cerr << "calibration infeasible: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
