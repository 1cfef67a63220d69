#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlab/matrix.hpp"

namespace driftlab {

enum class TaskKind { classification, segmentation };

const char* task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

// One image plus its target. Classification samples carry a class label,
// segmentation samples a per-pixel binary mask.
struct Sample {
    std::vector<double> pixels;  // H*W, row-major, values in [0,1]
    int label = -1;
    std::vector<uint8_t> mask;
};

struct TaskDataset {
    TaskKind kind = TaskKind::classification;
    int height = 0;
    int width = 0;
    int num_classes = 0;
    uint64_t gen_seed = 0;
    std::vector<Sample> samples;

    int size() const { return static_cast<int>(samples.size()); }
};

struct SplitDataset {
    TaskDataset train;
    TaskDataset test;
};

// Balanced stripe-pattern classification task. Class k gets stripes of
// period 4 oriented at angle k*pi/K, with a random phase per sample,
// i.i.d. Gaussian pixel noise (sigma = noise_sigma) and a per-sample
// brightness jitter in [-0.1, 0.1]; everything clamped to [0,1].
TaskDataset gen_classification(int n, int h, int w, int k, double noise_sigma, uint64_t seed);

// Toy segmentation task: 1-3 bright blobs on a dark textured background;
// the mask is the blob support.
TaskDataset gen_segmentation(int n, int h, int w, uint64_t seed);

// Seeded shuffle, then the first round(test_fraction*n) samples become the
// held-out test split. The test split is never sharded or corrupted.
SplitDataset split_train_test(const TaskDataset& ds, double test_fraction, uint64_t seed);

// A client's slice of the training split. sample_indices point into the
// train dataset; rehearsal_flags marks samples that are always served clean.
struct ClientShard {
    int client_id = 0;
    std::vector<int> sample_indices;
    std::vector<uint8_t> rehearsal_flags;  // parallel to sample_indices

    int size() const { return static_cast<int>(sample_indices.size()); }
    int rehearsal_count() const;
};

// Seeded shuffle then contiguous split; sizes differ by at most one with the
// remainder going to the lowest client ids. Rehearsal flags start empty.
std::vector<ClientShard> shard_clients(const TaskDataset& train, int num_clients, uint64_t seed);

// Marks round(fraction * |shard|) seeded samples per client as rehearsal.
void assign_rehearsal(std::vector<ClientShard>& shards, double fraction, uint64_t seed);

// Fraction of exact matches.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Dice overlap 2|A∩B| / (|A|+|B|); 1.0 when both masks are empty.
double dice(std::span<const uint8_t> pred_mask, std::span<const uint8_t> true_mask);

// Per-pixel features for the segmentation model: the flattened 3x3
// neighborhood of every pixel, zero-padded at the borders. H*W rows x 9.
Matrix neighborhood_features(const std::vector<double>& image, int h, int w);

// Debug dump/load of a dataset as a flat CSV sample table.
void dump_dataset_csv(const TaskDataset& ds, const std::string& path);
TaskDataset load_dataset_csv(const std::string& path);

}  // namespace driftlab
