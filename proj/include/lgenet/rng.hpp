#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace lgenet {

// Seeded generator with platform-pinned value mapping. std::*_distribution is
// implementation-defined, so uniform/normal draws are derived from raw 64-bit
// output directly; the same seed gives the same stream everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection-free modulo bias is negligible for
    // the index ranges used here, but stay exact anyway.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Standard normal via Box-Muller (one value per call, no caching so the
    // stream stays splittable).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Fisher-Yates partial shuffle: writes a uniform k-subset of [0, n) into
    // out (order random).
    template <typename Index>
    void sample_without_replacement(Index n, Index k, std::vector<Index>& out) {
        out.resize(static_cast<size_t>(n));
        for (Index i = 0; i < n; ++i) out[static_cast<size_t>(i)] = i;
        for (Index i = 0; i < k; ++i) {
            const Index j =
                i + static_cast<Index>(uniform_index(static_cast<uint64_t>(n - i)));
            std::swap(out[static_cast<size_t>(i)], out[static_cast<size_t>(j)]);
        }
        out.resize(static_cast<size_t>(k));
    }

    std::string save_state() const {
        std::ostringstream ss;
        ss << engine_;
        return ss.str();
    }

    void load_state(const std::string& s) {
        std::istringstream ss(s);
        ss >> engine_;
    }

private:
    std::mt19937_64 engine_;
};

// Derives an independent stream from (seed, stream, index) so parallel or
// per-iteration draws stay reproducible regardless of call order.
inline uint64_t split_seed(uint64_t seed, uint64_t stream, uint64_t index = 0) {
    // splitmix64 finalizer over the mixed words
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) +
                 0xbf58476d1ce4e5b9ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace lgenet
