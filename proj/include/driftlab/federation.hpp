#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/corruptions.hpp"
#include "driftlab/nn.hpp"
#include "driftlab/tasks.hpp"

namespace driftlab {

// Everything a federated run needs: federation shape, optimizer, task and
// dataset parameters, and the configured corruption kinds.
struct FederationConfig {
    int total_clients = 20;
    int clients_per_round = 10;
    int local_epochs = 1;
    double lr = 0.15;
    int batch_size = 32;
    int rounds_cd = 60;
    int rounds_cf = 30;
    double rehearsal_fraction = 0.0;
    uint64_t seed = 1;

    TaskKind task = TaskKind::classification;
    int dataset_samples = 0;  // 0 = task default (classification 1600, segmentation 120)
    int height = 16;
    int width = 16;
    int num_classes = 2;
    double noise_sigma = 0.08;
    double test_fraction = 0.2;
    std::vector<int> hidden_dims{32};

    std::vector<CorruptionKind> corruption_kinds{CorruptionKind::gaussian_noise};
    bool per_client_kind = false;
    double occlusion_opacity = 0.9;
    uint64_t corruption_salt = 0;  // 0 = derive from the run seed

    void validate() const;
    int resolved_dataset_samples() const;
    std::vector<int> model_dims() const;  // input, hidden..., output for the task
};

// Which clients are shifted and how strongly. shifted_client_ids is the
// ceil(ratio*c)-long prefix of one seeded permutation of [0,c), so sets are
// nested as the ratio grows.
struct ShiftPlan {
    double shifted_ratio = 0.0;
    CorruptionSpec severity;
    std::vector<int> shifted_client_ids;

    bool client_shifted(int client_id) const;
};

ShiftPlan make_shift_plan(double ratio, int total_clients, uint64_t seed, CorruptionSpec severity);

// Clean-test metric after every aggregation round.
struct TrainingHistory {
    std::vector<double> metrics;

    double final_metric() const { return metrics.back(); }
    int rounds() const { return static_cast<int>(metrics.size()); }
};

// Per-sample training rows: classification samples contribute one row of
// raw pixels, segmentation samples one row per pixel (3x3 neighborhoods).
struct SampleRows {
    Matrix inputs;
    std::vector<int> labels;
};

// Immutable per-seed context: generated data, shards, rehearsal flags and
// precomputed clean features. Built once, shared read-only across runs.
struct FedEnv {
    FederationConfig cfg;
    SplitDataset data;
    std::vector<ClientShard> shards;
    uint64_t corruption_salt = 0;

    std::vector<SampleRows> clean_train_rows;  // per train sample
    Matrix test_inputs;                        // classification eval
    std::vector<int> test_labels;
    std::vector<Matrix> test_image_rows;       // segmentation eval, per image

    static FedEnv build(const FederationConfig& cfg);
    const char* metric_name() const;
};

// Accuracy (classification) or pooled dice over all test pixels (segmentation)
// of the clean held-out split.
double evaluate(const FedEnv& env, const ModelParams& params);

// Splits a model's score between a clean and a corrupted view of the test
// split; used by the calibration and feasibility procedures.
double evaluate_corrupted(const FedEnv& env, const ModelParams& params, const CorruptionSpec& spec);

// One client's local pass: copies the global params and runs local_epochs
// seeded-minibatch epochs over the shard. Samples of shifted clients are
// served corrupted (fixed per-sample corruption seed); rehearsal samples are
// always served clean.
ModelParams local_train(const FedEnv& env, const ModelParams& global, const ClientShard& shard,
                        const ShiftPlan& plan, int round_idx, uint64_t stream_key);

struct ClientUpdate {
    int client_id = 0;
    ModelParams params;
    int num_samples = 0;
};

// Weighted parameter mean. The reduction is keyed by client id, so the
// result does not depend on the order updates arrive in.
ModelParams aggregate(std::vector<ClientUpdate> updates);

struct FedRunResult {
    ModelParams params;
    TrainingHistory history;
};

// FedAvg: each round samples clients_per_round distinct clients, trains them
// locally, aggregates by shard size and evaluates on the clean test split.
// Throws DivergenceError naming the round if parameters go non-finite.
FedRunResult run_federation(const FedEnv& env, const ShiftPlan& plan, int rounds,
                            ModelParams start, uint64_t stream_key);

namespace detail {
// The corrupted-or-clean row block a client would train on for one sample.
// Exposed for tests of the rehearsal/shift serving rules.
SampleRows serve_sample(const FedEnv& env, int train_index, bool shifted, bool rehearsal,
                        const ShiftPlan& plan, int client_id);
// Corruption spec actually applied to one sample (resolves the kind-mixing
// rule when several kinds are configured).
CorruptionSpec resolve_sample_spec(const FedEnv& env, const ShiftPlan& plan, int train_index,
                                   int client_id);
}  // namespace detail

}  // namespace driftlab
