#include "driftlab/federation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr uint64_t kTagDataset = 0x64617461;
constexpr uint64_t kTagSplit = 0x73706c69;
constexpr uint64_t kTagShard = 0x73686472;
constexpr uint64_t kTagRehearsal = 0x72656873;
constexpr uint64_t kTagSalt = 0x73616c74;
constexpr uint64_t kTagShiftPerm = 0x73686674;
constexpr uint64_t kTagRound = 0x726f756e;
constexpr uint64_t kTagClient = 0x636c6e74;
constexpr uint64_t kTagEpoch = 0x65706f63;
constexpr uint64_t kTagKindMix = 0x6b696e64;

SampleRows rows_for_image(const FedEnv& env, const std::vector<double>& pixels,
                          const Sample& sample) {
    SampleRows rows;
    if (env.cfg.task == TaskKind::classification) {
        rows.inputs = Matrix(1, static_cast<int>(pixels.size()));
        std::copy(pixels.begin(), pixels.end(), rows.inputs.data.begin());
        rows.labels.assign(1, sample.label);
    } else {
        rows.inputs = neighborhood_features(pixels, env.cfg.height, env.cfg.width);
        rows.labels.resize(sample.mask.size());
        for (size_t p = 0; p < sample.mask.size(); ++p)
            rows.labels[p] = sample.mask[p] ? 1 : 0;
    }
    return rows;
}

}  // namespace

void FederationConfig::validate() const {
    if (total_clients < 1) throw ConfigError("total_clients must be >= 1");
    if (clients_per_round < 1 || clients_per_round > total_clients)
        throw ConfigError("clients_per_round must be in [1, total_clients]");
    if (local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (rounds_cd < 1 || rounds_cf < 1) throw ConfigError("round counts must be >= 1");
    if (rehearsal_fraction < 0.0 || rehearsal_fraction >= 1.0)
        throw ConfigError("rehearsal_fraction must be in [0,1)");
    if (height < 8 || width < 8) throw ConfigError("image size must be at least 8x8");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw ConfigError("test_fraction must be in (0,1)");
    if (hidden_dims.empty()) throw ConfigError("need at least one hidden layer dim");
    for (int d : hidden_dims)
        if (d < 1) throw ConfigError("hidden dims must be positive");
    if (corruption_kinds.empty()) throw ConfigError("need at least one corruption kind");
    if (occlusion_opacity < 0.0 || occlusion_opacity > 1.0)
        throw ConfigError("occlusion opacity must be in [0,1]");
    int n = resolved_dataset_samples();
    if (task == TaskKind::classification && n % num_classes != 0)
        throw ConfigError("dataset_samples must be divisible by num_classes");
    int train_n = n - static_cast<int>(std::llround(test_fraction * n));
    if (train_n < total_clients)
        throw ConfigError("training split smaller than the client count");
}

int FederationConfig::resolved_dataset_samples() const {
    if (dataset_samples > 0) return dataset_samples;
    return task == TaskKind::classification ? 1600 : 120;
}

std::vector<int> FederationConfig::model_dims() const {
    std::vector<int> dims;
    dims.push_back(task == TaskKind::classification ? height * width : 9);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(task == TaskKind::classification ? num_classes : 2);
    return dims;
}

bool ShiftPlan::client_shifted(int client_id) const {
    return std::find(shifted_client_ids.begin(), shifted_client_ids.end(), client_id) !=
           shifted_client_ids.end();
}

ShiftPlan make_shift_plan(double ratio, int total_clients, uint64_t seed,
                          CorruptionSpec severity) {
    if (ratio < 0.0 || ratio > 1.0) throw ConfigError("shifted ratio must be in [0,1]");
    ShiftPlan plan;
    plan.shifted_ratio = ratio;
    plan.severity = severity;
    // epsilon guards against products like 0.1*20 landing just above the
    // exact integer
    int count = static_cast<int>(std::ceil(ratio * total_clients - 1e-9));
    count = std::clamp(count, 0, total_clients);
    std::vector<int> perm = seeded_permutation(total_clients, derive_key(seed, kTagShiftPerm));
    plan.shifted_client_ids.assign(perm.begin(), perm.begin() + count);
    std::sort(plan.shifted_client_ids.begin(), plan.shifted_client_ids.end());
    return plan;
}

FedEnv FedEnv::build(const FederationConfig& cfg) {
    cfg.validate();
    FedEnv env;
    env.cfg = cfg;
    int n = cfg.resolved_dataset_samples();
    TaskDataset full =
        cfg.task == TaskKind::classification
            ? gen_classification(n, cfg.height, cfg.width, cfg.num_classes, cfg.noise_sigma,
                                 derive_key(cfg.seed, kTagDataset))
            : gen_segmentation(n, cfg.height, cfg.width, derive_key(cfg.seed, kTagDataset));
    env.data = split_train_test(full, cfg.test_fraction, derive_key(cfg.seed, kTagSplit));
    env.shards = shard_clients(env.data.train, cfg.total_clients, derive_key(cfg.seed, kTagShard));
    assign_rehearsal(env.shards, cfg.rehearsal_fraction, derive_key(cfg.seed, kTagRehearsal));
    env.corruption_salt =
        cfg.corruption_salt != 0 ? cfg.corruption_salt : derive_key(cfg.seed, kTagSalt);

    env.clean_train_rows.reserve(env.data.train.samples.size());
    for (const Sample& s : env.data.train.samples)
        env.clean_train_rows.push_back(rows_for_image(env, s.pixels, s));

    if (cfg.task == TaskKind::classification) {
        int d = cfg.height * cfg.width;
        env.test_inputs = Matrix(env.data.test.size(), d);
        env.test_labels.resize(env.data.test.samples.size());
        for (int i = 0; i < env.data.test.size(); ++i) {
            const Sample& s = env.data.test.samples[static_cast<size_t>(i)];
            std::copy(s.pixels.begin(), s.pixels.end(), env.test_inputs.row(i));
            env.test_labels[static_cast<size_t>(i)] = s.label;
        }
    } else {
        env.test_image_rows.reserve(env.data.test.samples.size());
        for (const Sample& s : env.data.test.samples)
            env.test_image_rows.push_back(neighborhood_features(s.pixels, cfg.height, cfg.width));
    }
    return env;
}

const char* FedEnv::metric_name() const {
    return cfg.task == TaskKind::classification ? "accuracy" : "dice";
}

namespace {

double pooled_dice_over_test(const FedEnv& env, const ModelParams& params,
                             const std::vector<std::vector<double>>* corrupted_images) {
    size_t inter = 0, a = 0, b = 0;
    for (size_t i = 0; i < env.data.test.samples.size(); ++i) {
        const Sample& s = env.data.test.samples[i];
        std::vector<int> pred;
        if (corrupted_images) {
            Matrix rows =
                neighborhood_features((*corrupted_images)[i], env.cfg.height, env.cfg.width);
            pred = predict_classes(params, rows);
        } else {
            pred = predict_classes(params, env.test_image_rows[i]);
        }
        for (size_t p = 0; p < s.mask.size(); ++p) {
            bool pa = pred[p] != 0;
            bool pb = s.mask[p] != 0;
            inter += pa && pb;
            a += pa;
            b += pb;
        }
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

}  // namespace

double evaluate(const FedEnv& env, const ModelParams& params) {
    if (env.cfg.task == TaskKind::classification) {
        std::vector<int> pred = predict_classes(params, env.test_inputs);
        return accuracy(pred, env.test_labels);
    }
    return pooled_dice_over_test(env, params, nullptr);
}

double evaluate_corrupted(const FedEnv& env, const ModelParams& params,
                          const CorruptionSpec& spec) {
    if (env.cfg.task == TaskKind::classification) {
        int d = env.cfg.height * env.cfg.width;
        Matrix inputs(env.data.test.size(), d);
        for (int i = 0; i < env.data.test.size(); ++i) {
            const Sample& s = env.data.test.samples[static_cast<size_t>(i)];
            std::vector<double> img = apply_corruption(
                s.pixels, env.cfg.height, env.cfg.width, spec,
                derive_key(env.corruption_salt, 0x74657374u, static_cast<uint64_t>(i)));
            std::copy(img.begin(), img.end(), inputs.row(i));
        }
        std::vector<int> pred = predict_classes(params, inputs);
        return accuracy(pred, env.test_labels);
    }
    std::vector<std::vector<double>> corrupted;
    corrupted.reserve(env.data.test.samples.size());
    for (size_t i = 0; i < env.data.test.samples.size(); ++i)
        corrupted.push_back(apply_corruption(env.data.test.samples[i].pixels, env.cfg.height,
                                             env.cfg.width, spec,
                                             derive_key(env.corruption_salt, 0x74657374u,
                                                        static_cast<uint64_t>(i))));
    return pooled_dice_over_test(env, params, &corrupted);
}

namespace detail {

CorruptionSpec resolve_sample_spec(const FedEnv& env, const ShiftPlan& plan, int train_index,
                                   int client_id) {
    CorruptionSpec spec = plan.severity;
    const auto& kinds = env.cfg.corruption_kinds;
    if (kinds.size() > 1) {
        uint64_t pick =
            env.cfg.per_client_kind
                ? derive_key(env.corruption_salt, kTagKindMix, static_cast<uint64_t>(client_id))
                : derive_key(env.corruption_salt, kTagKindMix, static_cast<uint64_t>(train_index));
        spec.kind = kinds[static_cast<size_t>(mix64(pick) % kinds.size())];
    } else {
        spec.kind = kinds.front();
    }
    spec.rng_salt = env.corruption_salt;
    return spec;
}

SampleRows serve_sample(const FedEnv& env, int train_index, bool shifted, bool rehearsal,
                        const ShiftPlan& plan, int client_id) {
    const SampleRows& clean = env.clean_train_rows[static_cast<size_t>(train_index)];
    if (!shifted || rehearsal || plan.severity.is_identity()) return clean;
    CorruptionSpec spec = resolve_sample_spec(env, plan, train_index, client_id);
    if (spec.is_identity()) return clean;
    const Sample& sample = env.data.train.samples[static_cast<size_t>(train_index)];
    std::vector<double> corrupted =
        apply_corruption(sample.pixels, env.cfg.height, env.cfg.width, spec,
                         derive_key(env.corruption_salt, static_cast<uint64_t>(train_index)));
    return rows_for_image(env, corrupted, sample);
}

}  // namespace detail

ModelParams local_train(const FedEnv& env, const ModelParams& global, const ClientShard& shard,
                        const ShiftPlan& plan, int round_idx, uint64_t stream_key) {
    if (shard.size() == 0) throw ConfigError("client shard is empty");
    const FederationConfig& cfg = env.cfg;
    ModelParams params = global;
    if (cfg.local_epochs == 0) return params;

    bool shifted = plan.client_shifted(shard.client_id);

    // Assemble this client's epoch rows once; the shift plan is fixed for the
    // whole call so corrupted samples are identical across epochs.
    int total_rows = 0;
    std::vector<SampleRows> served;
    served.reserve(shard.sample_indices.size());
    for (size_t s = 0; s < shard.sample_indices.size(); ++s) {
        served.push_back(detail::serve_sample(env, shard.sample_indices[s], shifted,
                                              shard.rehearsal_flags[s] != 0, plan,
                                              shard.client_id));
        total_rows += served.back().inputs.rows;
    }
    int dim = served.front().inputs.cols;
    Matrix all_inputs(total_rows, dim);
    std::vector<int> all_labels(static_cast<size_t>(total_rows));
    int cursor = 0;
    for (const SampleRows& rows : served) {
        std::copy(rows.inputs.data.begin(), rows.inputs.data.end(), all_inputs.row(cursor));
        std::copy(rows.labels.begin(), rows.labels.end(), all_labels.begin() + cursor);
        cursor += rows.inputs.rows;
    }

    uint64_t client_key =
        derive_key(stream_key, kTagClient, static_cast<uint64_t>(round_idx),
                   static_cast<uint64_t>(shard.client_id));
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::vector<int> order = seeded_permutation(
            total_rows, derive_key(client_key, kTagEpoch, static_cast<uint64_t>(epoch)));
        for (int start = 0; start < total_rows; start += cfg.batch_size) {
            int stop = std::min(start + cfg.batch_size, total_rows);
            Batch batch;
            batch.inputs = Matrix(stop - start, dim);
            batch.labels.resize(static_cast<size_t>(stop - start));
            for (int r = start; r < stop; ++r) {
                int src = order[static_cast<size_t>(r)];
                std::copy(all_inputs.row(src), all_inputs.row(src) + dim,
                          batch.inputs.row(r - start));
                batch.labels[static_cast<size_t>(r - start)] = all_labels[static_cast<size_t>(src)];
            }
            LossGrad lg = loss_and_grad(params, batch);
            params = sgd_step(params, lg.grads, cfg.lr);
        }
    }
    return params;
}

ModelParams aggregate(std::vector<ClientUpdate> updates) {
    if (updates.empty()) throw ConfigError("aggregate needs at least one client update");
    std::sort(updates.begin(), updates.end(),
              [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });
    for (const ClientUpdate& u : updates)
        if (!u.params.same_shape(updates.front().params))
            throw ShapeError("client params have mismatched shapes");

    double total = 0.0;
    for (const ClientUpdate& u : updates) total += static_cast<double>(u.num_samples);
    if (total <= 0.0) throw ConfigError("aggregate weights sum to zero");

    ModelParams out = updates.front().params;
    for (auto& layer : out.layers) {
        std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    for (const ClientUpdate& u : updates) {
        double wgt = static_cast<double>(u.num_samples) / total;
        for (size_t l = 0; l < out.layers.size(); ++l) {
            const LayerParams& src = u.params.layers[l];
            LayerParams& dst = out.layers[l];
            for (size_t i = 0; i < dst.weights.data.size(); ++i)
                dst.weights.data[i] += wgt * src.weights.data[i];
            for (size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += wgt * src.bias[i];
        }
    }
    return out;
}

FedRunResult run_federation(const FedEnv& env, const ShiftPlan& plan, int rounds,
                            ModelParams start, uint64_t stream_key) {
    const FederationConfig& cfg = env.cfg;
    if (start.layer_dims != cfg.model_dims())
        throw ShapeError("start params do not match the configured model dims");

    FedRunResult result;
    result.params = std::move(start);
    result.history.metrics.reserve(static_cast<size_t>(rounds));

    std::vector<int> ids(static_cast<size_t>(cfg.total_clients));
    for (int i = 0; i < cfg.total_clients; ++i) ids[static_cast<size_t>(i)] = i;

    for (int round = 0; round < rounds; ++round) {
        // sample clients_per_round distinct clients, reseeded per round
        Rng sampler(derive_key(stream_key, kTagRound, static_cast<uint64_t>(round)));
        std::vector<int> pool = ids;
        std::vector<int> selected;
        selected.reserve(static_cast<size_t>(cfg.clients_per_round));
        for (int pick = 0; pick < cfg.clients_per_round; ++pick) {
            size_t j = pick + static_cast<size_t>(sampler.next_below(pool.size() - pick));
            std::swap(pool[static_cast<size_t>(pick)], pool[j]);
            selected.push_back(pool[static_cast<size_t>(pick)]);
        }
        std::sort(selected.begin(), selected.end());

        std::vector<ClientUpdate> updates;
        updates.reserve(selected.size());
        for (int client_id : selected) {
            const ClientShard& shard = env.shards[static_cast<size_t>(client_id)];
            ClientUpdate update;
            update.client_id = client_id;
            update.num_samples = shard.size();
            update.params = local_train(env, result.params, shard, plan, round, stream_key);
            updates.push_back(std::move(update));
        }
        result.params = aggregate(std::move(updates));
        if (!result.params.all_finite())
            throw DivergenceError(
                "non-finite parameters after round " + std::to_string(round), round);
        result.history.metrics.push_back(evaluate(env, result.params));
    }
    return result;
}

}  // namespace driftlab
