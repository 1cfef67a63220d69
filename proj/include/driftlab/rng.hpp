#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace driftlab {

// splitmix64 finalizer. Bijective on 64-bit words with full avalanche,
// which is all the keyed-stream scheme below needs.
constexpr uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Folds one word into a stream key. Used to derive named substreams so that
// every piece of randomness is a pure function of (root seed, path of tags)
// and never of execution order.
constexpr uint64_t derive_key(uint64_t key, uint64_t word) {
    return mix64(key ^ (0x9e3779b97f4a7c15ull + word + (key << 6) + (key >> 2)));
}

constexpr uint64_t derive_key(uint64_t key, uint64_t a, uint64_t b) {
    return derive_key(derive_key(key, a), b);
}

constexpr uint64_t derive_key(uint64_t key, uint64_t a, uint64_t b, uint64_t c) {
    return derive_key(derive_key(key, a, b), c);
}

// Deterministic sequential generator over a splitmix64 stream.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t counter = state_;
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(counter);
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Standard normal via Box-Muller; one value per call.
    double next_normal() {
        double u1 = 1.0 - next_unit();  // (0, 1]
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n). Multiply-shift map; bias is O(n / 2^64).
    uint64_t next_below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // Fisher-Yates in-place shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// Identity permutation of [0, n) shuffled under the given key.
inline std::vector<int> seeded_permutation(int n, uint64_t key) {
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    Rng rng(key);
    rng.shuffle(perm);
    return perm;
}

}  // namespace driftlab
