#pragma once

#include <string>
#include <vector>

#include "driftlab/federation.hpp"

namespace driftlab {

// Full experiment configuration: the federation config plus seed fan-out,
// worker pool and output settings. Parsed from a sectioned key=value file;
// unknown sections or keys are rejected by name.
struct RunConfig {
    FederationConfig fed;
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    int workers = 1;
    std::string out_dir = "runs";
    int ablation_rounds_cd = 30;
    int ablation_rounds_cf = 15;
    bool write_histories = false;

    void validate() const;
};

RunConfig default_run_config();

// Applies `key = value` lines from a config file on top of `cfg`.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source);

RunConfig load_config_file(const std::string& path);

// The config in its own file format; load(dump(cfg)) == cfg.
std::string dump_config(const RunConfig& cfg);

// The resolved config as a JSON object, embedded in every output document.
std::string config_to_json(const RunConfig& cfg);

std::vector<uint64_t> parse_seed_list(const std::string& text);
std::vector<CorruptionKind> parse_kind_list(const std::string& text);

}  // namespace driftlab
