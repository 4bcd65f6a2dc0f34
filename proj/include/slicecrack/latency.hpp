#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "slicecrack/geometry.hpp"

namespace slicecrack {

// Analytic access-latency model: an all-hit plateau up to the associativity,
// then a linear climb toward memory latency as the working set overflows.
struct LatencyModel {
    double l_llc = 40.0;
    double l_memory = 200.0;
    double noise_stddev = 0.0;  // per-access Gaussian noise, 0 = deterministic
    uint64_t rng_seed = 0;

    void validate() const {
        if (!(l_memory > l_llc) || !(l_llc > 0.0))
            throw std::invalid_argument("require l_memory > l_llc > 0");
        if (noise_stddev < 0.0) throw std::invalid_argument("noise_stddev must be >= 0");
    }
};

// Average latency when n distinct blocks cycle through one cache set of
// associativity N. Deterministic part only.
inline double latency_mean(uint64_t n, uint32_t associativity, const LatencyModel& m) {
    if (n == 0) throw std::invalid_argument("block count must be >= 1");
    double nn = static_cast<double>(n);
    double N = static_cast<double>(associativity);
    if (nn < N) return m.l_llc;
    return m.l_memory * (nn / N - 1.0) + m.l_llc;
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
    uint64_t h = a * 0x9e3779b97f4a7c15ull;
    h ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= c + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

// Single noisy sample of the model; `draw` distinguishes repeated samples so
// the function stays pure and thread-safe.
inline double latency(uint64_t n, const CacheGeometry& geom, const LatencyModel& m,
                      uint64_t draw = 0) {
    double value = latency_mean(n, geom.associativity, m);
    if (m.noise_stddev > 0.0) {
        std::mt19937_64 rng(mix_seed(m.rng_seed, n, draw));
        std::normal_distribution<double> gauss(0.0, m.noise_stddev);
        value += gauss(rng);
    }
    return value;
}

}  // namespace slicecrack
