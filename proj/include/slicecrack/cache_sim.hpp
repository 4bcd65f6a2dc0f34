#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slicecrack/geometry.hpp"
#include "slicecrack/slice_hash.hpp"
#include "slicecrack/trace.hpp"

namespace slicecrack {

enum class ReplacementPolicy {
    LruMruInsert,  // classic LRU, fills inserted at MRU
    DirtyRetain,   // prefer evicting clean lines; dirty lines stay put
};

// Pointer-chase workload over a fixed set of line-aligned blocks.
struct WorkloadConfig {
    std::vector<uint64_t> block_addresses;
    uint64_t shuffle_seed = 0;
    uint64_t iterations = 2;   // laps over the chain
    bool dirty_writes = false; // store into each line after the load
    uint64_t idle_gap = 1000;  // ticks of idle loop between accesses
};

// Cyclic access order visiting every block once per lap; deterministic
// under shuffle_seed. Throws on duplicate addresses.
std::vector<uint64_t> build_chain(const WorkloadConfig& config);

struct AccessResult {
    bool hit = false;
    // (victim address, was_dirty) when a full set had to make room.
    std::optional<std::pair<uint64_t, bool>> evicted;
};

class SlicedCache {
public:
    SlicedCache(const CacheGeometry& geom, SliceHash hash,
                ReplacementPolicy policy = ReplacementPolicy::LruMruInsert);

    AccessResult access(uint64_t address, bool is_write);

    const CacheGeometry& geometry() const { return geom_; }
    const SliceHash& hash() const { return hash_; }

    // Resident line count in one (slice, set); never exceeds associativity.
    size_t occupancy(uint32_t slice, uint64_t set_index) const;

private:
    struct Line {
        uint64_t address;
        bool dirty;
    };
    // Each set holds lines in recency order, LRU at the front.
    std::vector<std::vector<Line>> sets_;
    CacheGeometry geom_;
    SliceHash hash_;
    ReplacementPolicy policy_;

    std::vector<Line>& set_for(uint64_t address);
};

struct WorkloadStats {
    uint64_t hits = 0, misses = 0, writebacks = 0;
    // Steady state excludes the first (warm-up) lap.
    uint64_t steady_hits = 0, steady_misses = 0, steady_writebacks = 0;
};

// Runs the chain for `iterations` laps, emitting one read event per fill and
// one write event per dirty eviction. The two events of a single access are
// adjacent in the trace.
MemoryTrace run_workload(SlicedCache& cache, const WorkloadConfig& config,
                         WorkloadStats* stats = nullptr);

}  // namespace slicecrack
