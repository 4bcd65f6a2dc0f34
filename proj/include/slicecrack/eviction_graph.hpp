#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "slicecrack/geometry.hpp"
#include "slicecrack/slice_hash.hpp"
#include "slicecrack/trace.hpp"

namespace slicecrack {

// A fill that displaced another block: evidence the two share a cache set.
struct EvictionEdge {
    uint64_t filled = 0;
    uint64_t evicted = 0;
    uint64_t seq_of_read = 0;
};

struct EdgeExtraction {
    std::vector<EvictionEdge> edges;
    std::vector<uint64_t> unpaired_write_seqs;  // diagnostics, never dropped silently
};

// Pairs each write event with the nearest read within `max_pair_gap` events.
// The idle loop between accesses makes causal pairs adjacent in the trace.
EdgeExtraction extract_edges(const MemoryTrace& trace, uint64_t max_pair_gap = 2);

struct BlockGroups {
    std::vector<std::vector<uint64_t>> groups;  // members sorted ascending
    std::unordered_map<uint64_t, uint32_t> labeling;
    // Isolated nodes (no observed eviction either way) form singleton groups.
    std::vector<bool> unclassified;
};

// BFS over the eviction graph; group ids assigned by ascending smallest
// member address so labels are canonical.
BlockGroups connected_components(std::span<const EvictionEdge> edges,
                                 std::span<const uint64_t> all_nodes);

// End-to-end classification of a block pool against a planted hash: runs the
// polluted workload under several distinct shuffle orders and unions the
// eviction evidence. One fixed cyclic order only links fill p to victim
// p - associativity, which splits each same-set bucket into
// gcd(bucket_size, associativity) cycles; independent orders complete the
// graph while every single run stays deterministic.
BlockGroups classify_blocks(const CacheGeometry& geom, const SliceHash& hash,
                            std::span<const uint64_t> blocks, uint64_t seed = 1,
                            int runs = 3, uint64_t iterations = 2);

struct AccessHistogram {
    std::unordered_map<uint64_t, uint64_t> counts;  // read fills per block
    double coefficient_of_variation = 0.0;          // 0 = perfectly uniform
};

// Counts read fills per block for events with seq in [seq_begin, seq_end].
// Blocks seen anywhere in the trace but not in the window count as zero.
AccessHistogram access_histogram(const MemoryTrace& trace, uint64_t seq_begin,
                                 uint64_t seq_end);

}  // namespace slicecrack
