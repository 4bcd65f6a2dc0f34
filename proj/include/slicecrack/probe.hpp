#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "slicecrack/eviction_graph.hpp"
#include "slicecrack/geometry.hpp"
#include "slicecrack/latency.hpp"
#include "slicecrack/slice_hash.hpp"

namespace slicecrack {

// Measurement boundary for timing-only cracking. Hardware backends implement
// the same interface; desk mode answers from the analytic model and a
// planted hash.
class LatencyOracle {
public:
    virtual ~LatencyOracle() = default;

    // Average latency of a pointer chase over `blocks`.
    virtual double measure_once(std::span<const uint64_t> blocks) = 0;

    // Latency seen by the `probed` subset while `all` blocks are in play
    // (two-thread scenarios). Defaults to measuring everything.
    virtual double measure_subset(std::span<const uint64_t> all,
                                  std::span<const uint64_t> probed);

    // Cutoff separating the all-hit regime from the first conflict step.
    virtual double threshold() const = 0;

    uint64_t calls() const { return calls_; }

protected:
    uint64_t calls_ = 0;
};

class DeskOracle : public LatencyOracle {
public:
    // `chase_iterations` models the averaging of a long pointer-chase run:
    // measurement noise shrinks with the number of accesses averaged.
    DeskOracle(const CacheGeometry& geom, SliceHash hash, LatencyModel model,
               uint64_t chase_iterations = 64);

    double measure_once(std::span<const uint64_t> blocks) override;
    double measure_subset(std::span<const uint64_t> all,
                          std::span<const uint64_t> probed) override;
    double threshold() const override { return threshold_; }

    const CacheGeometry& geometry() const { return geom_; }
    const LatencyModel& model() const { return model_; }

    // First `count` line-aligned addresses the planted hash maps to the given
    // (slice, set) bucket. Test scaffolding for the verification experiments.
    std::vector<uint64_t> same_bucket_blocks(uint32_t slice, uint64_t set_index,
                                             size_t count) const;

private:
    CacheGeometry geom_;
    SliceHash hash_;
    LatencyModel model_;
    uint64_t chase_iterations_;
    double threshold_;
    std::mt19937_64 rng_;

    double mean_over(std::span<const uint64_t> all, std::span<const uint64_t> probed);
};

// Median of `repeats` measurements.
double measure(LatencyOracle& oracle, std::span<const uint64_t> blocks, int repeats);

// Timing-only classification of a pool of blocks sharing one set index:
// find a conflicting core of associativity+1 blocks, then test every other
// block against the core. Repeats until the pool is exhausted.
BlockGroups crack_without_trace(LatencyOracle& oracle, std::span<const uint64_t> pool,
                                uint32_t associativity, int repeats = 1);

// Thread 1 pins k blocks; thread 2 sweeps 1..m_max blocks in the same or a
// different cache set. Returns the smallest m where thread 2's latency
// exceeds the oracle threshold.
std::optional<uint32_t> two_thread_experiment(DeskOracle& oracle, uint32_t k,
                                              uint32_t m_max, bool same_set,
                                              int repeats = 1);

}  // namespace slicecrack
