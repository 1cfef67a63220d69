#include "driftlab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr double kStripeHigh = 0.65;
constexpr double kStripeLow = 0.35;
constexpr double kStripePeriod = 4.0;
constexpr double kPi = 3.14159265358979323846;

constexpr uint64_t kTagSample = 0x73616d70;   // per-sample generation stream
constexpr uint64_t kTagSplit = 0x73706c74;    // train/test split
constexpr uint64_t kTagShard = 0x73686172;    // client sharding
constexpr uint64_t kTagRehearse = 0x72656861; // rehearsal buffer choice

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

const char* task_kind_name(TaskKind kind) {
    return kind == TaskKind::classification ? "classification" : "segmentation";
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "classification") return TaskKind::classification;
    if (name == "segmentation") return TaskKind::segmentation;
    throw ConfigError("unknown task kind: " + name);
}

int ClientShard::rehearsal_count() const {
    int n = 0;
    for (uint8_t f : rehearsal_flags) n += f ? 1 : 0;
    return n;
}

TaskDataset gen_classification(int n, int h, int w, int k, double noise_sigma, uint64_t seed) {
    if (n < 1 || k < 2) throw ConfigError("classification dataset needs n >= 1 and K >= 2");
    if (n % k != 0) throw ConfigError("sample count must be divisible by the class count");
    if (h < 8 || w < 8) throw ConfigError("image size must be at least 8x8");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");

    TaskDataset ds;
    ds.kind = TaskKind::classification;
    ds.height = h;
    ds.width = w;
    ds.num_classes = k;
    ds.gen_seed = seed;
    ds.samples.resize(static_cast<size_t>(n));

    for (int idx = 0; idx < n; ++idx) {
        int cls = idx % k;  // interleaved, exactly balanced
        Rng rng(derive_key(seed, kTagSample, static_cast<uint64_t>(idx)));
        double theta = kPi * static_cast<double>(cls) / static_cast<double>(k);
        double sin_t = std::sin(theta);
        double cos_t = std::cos(theta);
        double phase = rng.next_range(0.0, kStripePeriod);
        double jitter = rng.next_range(-0.1, 0.1);

        Sample& s = ds.samples[static_cast<size_t>(idx)];
        s.label = cls;
        s.pixels.resize(static_cast<size_t>(h) * static_cast<size_t>(w));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double t = static_cast<double>(x) * sin_t + static_cast<double>(y) * cos_t + phase;
                double m = t - kStripePeriod * std::floor(t / kStripePeriod);  // [0, period)
                double base = m < kStripePeriod / 2.0 ? kStripeHigh : kStripeLow;
                double v = base + jitter + noise_sigma * rng.next_normal();
                s.pixels[static_cast<size_t>(y) * w + x] = clamp01(v);
            }
        }
    }
    return ds;
}

TaskDataset gen_segmentation(int n, int h, int w, uint64_t seed) {
    if (n < 1) throw ConfigError("segmentation dataset needs n >= 1");
    if (h < 8 || w < 8) throw ConfigError("image size must be at least 8x8");

    TaskDataset ds;
    ds.kind = TaskKind::segmentation;
    ds.height = h;
    ds.width = w;
    ds.num_classes = 2;
    ds.gen_seed = seed;
    ds.samples.resize(static_cast<size_t>(n));

    double max_radius = std::min(h, w) / 4.0;
    for (int idx = 0; idx < n; ++idx) {
        Rng rng(derive_key(seed, kTagSample, static_cast<uint64_t>(idx)));
        Sample& s = ds.samples[static_cast<size_t>(idx)];
        size_t npx = static_cast<size_t>(h) * static_cast<size_t>(w);
        s.pixels.resize(npx);
        s.mask.assign(npx, 0);

        // dark textured background
        for (size_t p = 0; p < npx; ++p) s.pixels[p] = 0.15 + 0.12 * rng.next_unit();

        int blob_count = 1 + static_cast<int>(rng.next_below(3));
        for (int b = 0; b < blob_count; ++b) {
            double radius = rng.next_range(2.0, max_radius);
            double cx = rng.next_range(radius, static_cast<double>(w - 1) - radius);
            double cy = rng.next_range(radius, static_cast<double>(h - 1) - radius);
            double brightness = rng.next_range(0.7, 0.85);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double dx = static_cast<double>(x) - cx;
                    double dy = static_cast<double>(y) - cy;
                    if (dx * dx + dy * dy <= radius * radius) {
                        size_t p = static_cast<size_t>(y) * w + x;
                        s.pixels[p] = brightness;
                        s.mask[p] = 1;
                    }
                }
            }
        }
        // light pixel noise over everything
        for (size_t p = 0; p < npx; ++p) s.pixels[p] = clamp01(s.pixels[p] + 0.03 * rng.next_normal());
    }
    return ds;
}

SplitDataset split_train_test(const TaskDataset& ds, double test_fraction, uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw ConfigError("test_fraction must be in [0,1)");
    int n = ds.size();
    int n_test = static_cast<int>(std::llround(test_fraction * n));
    std::vector<int> perm = seeded_permutation(n, derive_key(seed, kTagSplit));

    SplitDataset out;
    out.train.kind = out.test.kind = ds.kind;
    out.train.height = out.test.height = ds.height;
    out.train.width = out.test.width = ds.width;
    out.train.num_classes = out.test.num_classes = ds.num_classes;
    out.train.gen_seed = out.test.gen_seed = ds.gen_seed;
    out.test.samples.reserve(static_cast<size_t>(n_test));
    out.train.samples.reserve(static_cast<size_t>(n - n_test));
    for (int i = 0; i < n; ++i) {
        const Sample& s = ds.samples[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        if (i < n_test)
            out.test.samples.push_back(s);
        else
            out.train.samples.push_back(s);
    }
    return out;
}

std::vector<ClientShard> shard_clients(const TaskDataset& train, int num_clients, uint64_t seed) {
    if (num_clients < 1) throw ConfigError("need at least one client");
    int n = train.size();
    if (num_clients > n)
        throw ConfigError("cannot shard " + std::to_string(n) + " samples across " +
                          std::to_string(num_clients) + " clients");

    std::vector<int> perm = seeded_permutation(n, derive_key(seed, kTagShard));
    int base = n / num_clients;
    int remainder = n % num_clients;

    std::vector<ClientShard> shards(static_cast<size_t>(num_clients));
    int cursor = 0;
    for (int c = 0; c < num_clients; ++c) {
        int take = base + (c < remainder ? 1 : 0);
        ClientShard& shard = shards[static_cast<size_t>(c)];
        shard.client_id = c;
        shard.sample_indices.assign(perm.begin() + cursor, perm.begin() + cursor + take);
        shard.rehearsal_flags.assign(static_cast<size_t>(take), 0);
        cursor += take;
    }
    return shards;
}

void assign_rehearsal(std::vector<ClientShard>& shards, double fraction, uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw ConfigError("rehearsal_fraction must be in [0,1)");
    for (ClientShard& shard : shards) {
        std::fill(shard.rehearsal_flags.begin(), shard.rehearsal_flags.end(), uint8_t{0});
        int count = static_cast<int>(std::llround(fraction * shard.size()));
        if (count == 0) continue;
        std::vector<int> order =
            seeded_permutation(shard.size(), derive_key(seed, kTagRehearse,
                                                        static_cast<uint64_t>(shard.client_id)));
        for (int i = 0; i < count; ++i)
            shard.rehearsal_flags[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;
    }
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw ShapeError("prediction and label counts differ");
    if (predictions.empty()) throw ShapeError("accuracy needs at least one prediction");
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double dice(std::span<const uint8_t> pred_mask, std::span<const uint8_t> true_mask) {
    if (pred_mask.size() != true_mask.size()) throw ShapeError("mask shapes differ");
    size_t a = 0, b = 0, inter = 0;
    for (size_t i = 0; i < pred_mask.size(); ++i) {
        bool pa = pred_mask[i] != 0;
        bool pb = true_mask[i] != 0;
        a += pa;
        b += pb;
        inter += pa && pb;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

Matrix neighborhood_features(const std::vector<double>& image, int h, int w) {
    if (static_cast<int>(image.size()) != h * w)
        throw ShapeError("image size does not match the given dimensions");
    Matrix rows(h * w, 9);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double* row = rows.row(y * w + x);
            int f = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx, ++f) {
                    int yy = y + dy;
                    int xx = x + dx;
                    row[f] = (yy < 0 || yy >= h || xx < 0 || xx >= w)
                                 ? 0.0
                                 : image[static_cast<size_t>(yy) * w + xx];
                }
            }
        }
    }
    return rows;
}

void dump_dataset_csv(const TaskDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "# kind=" << task_kind_name(ds.kind) << " h=" << ds.height << " w=" << ds.width
        << " k=" << ds.num_classes << " seed=" << ds.gen_seed << "\n";
    char buf[32];
    for (const Sample& s : ds.samples) {
        for (size_t p = 0; p < s.pixels.size(); ++p) {
            std::snprintf(buf, sizeof(buf), "%.17g", s.pixels[p]);
            out << buf << ',';
        }
        if (ds.kind == TaskKind::classification) {
            out << s.label << "\n";
        } else {
            for (size_t p = 0; p < s.mask.size(); ++p)
                out << static_cast<int>(s.mask[p]) << (p + 1 < s.mask.size() ? "," : "\n");
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

TaskDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    std::getline(in, header);
    TaskDataset ds;
    {
        std::istringstream hs(header);
        std::string tok;
        hs >> tok;  // '#'
        auto value_of = [&](const std::string& item) {
            auto pos = item.find('=');
            return item.substr(pos + 1);
        };
        while (hs >> tok) {
            if (tok.rfind("kind=", 0) == 0) ds.kind = task_kind_from_name(value_of(tok));
            else if (tok.rfind("h=", 0) == 0) ds.height = std::stoi(value_of(tok));
            else if (tok.rfind("w=", 0) == 0) ds.width = std::stoi(value_of(tok));
            else if (tok.rfind("k=", 0) == 0) ds.num_classes = std::stoi(value_of(tok));
            else if (tok.rfind("seed=", 0) == 0) ds.gen_seed = std::stoull(value_of(tok));
        }
    }
    size_t npx = static_cast<size_t>(ds.height) * static_cast<size_t>(ds.width);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        Sample s;
        s.pixels.reserve(npx);
        for (size_t p = 0; p < npx; ++p) {
            std::getline(ls, cell, ',');
            s.pixels.push_back(std::stod(cell));
        }
        if (ds.kind == TaskKind::classification) {
            std::getline(ls, cell, ',');
            s.label = std::stoi(cell);
        } else {
            s.mask.reserve(npx);
            for (size_t p = 0; p < npx; ++p) {
                std::getline(ls, cell, ',');
                s.mask.push_back(static_cast<uint8_t>(std::stoi(cell)));
            }
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace driftlab
