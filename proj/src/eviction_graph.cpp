#include "slicecrack/eviction_graph.hpp"

#include "slicecrack/cache_sim.hpp"
#include "slicecrack/latency.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

namespace slicecrack {

EdgeExtraction extract_edges(const MemoryTrace& trace, uint64_t max_pair_gap) {
    EdgeExtraction out;
    std::vector<bool> read_used(trace.size(), false);
    for (size_t i = 0; i < trace.size(); ++i) {
        if (trace[i].op != TraceEvent::Op::Write) continue;
        bool paired = false;
        // Nearest read wins; on a tie the preceding one (the causal fill).
        for (uint64_t d = 1; d <= max_pair_gap && !paired; ++d) {
            for (int dir : {-1, +1}) {
                size_t j = static_cast<size_t>(static_cast<int64_t>(i) + dir * static_cast<int64_t>(d));
                if (j >= trace.size()) continue;
                if (trace[j].op != TraceEvent::Op::Read || read_used[j]) continue;
                if (trace[j].address == trace[i].address) continue;
                out.edges.push_back({trace[j].address, trace[i].address, trace[j].seq});
                read_used[j] = true;
                paired = true;
                break;
            }
        }
        if (!paired) out.unpaired_write_seqs.push_back(trace[i].seq);
    }
    return out;
}

BlockGroups connected_components(std::span<const EvictionEdge> edges,
                                 std::span<const uint64_t> all_nodes) {
    std::map<uint64_t, std::vector<uint64_t>> adj;
    for (uint64_t n : all_nodes) adj.try_emplace(n);
    for (const auto& e : edges) {
        adj[e.filled].push_back(e.evicted);
        adj[e.evicted].push_back(e.filled);
    }

    std::set<uint64_t> visited;
    struct Component {
        std::vector<uint64_t> members;
        bool isolated;
    };
    std::vector<Component> components;
    // adj is ordered by address, so components come out keyed by their
    // smallest member already.
    for (const auto& [start, _] : adj) {
        if (visited.count(start)) continue;
        Component comp{{}, adj[start].empty()};
        std::deque<uint64_t> frontier{start};
        visited.insert(start);
        while (!frontier.empty()) {
            uint64_t node = frontier.front();
            frontier.pop_front();
            comp.members.push_back(node);
            for (uint64_t next : adj[node]) {
                if (visited.insert(next).second) frontier.push_back(next);
            }
        }
        std::sort(comp.members.begin(), comp.members.end());
        components.push_back(std::move(comp));
    }

    BlockGroups groups;
    for (uint32_t id = 0; id < components.size(); ++id) {
        for (uint64_t m : components[id].members) groups.labeling[m] = id;
        groups.groups.push_back(std::move(components[id].members));
        groups.unclassified.push_back(components[id].isolated);
    }
    return groups;
}

BlockGroups classify_blocks(const CacheGeometry& geom, const SliceHash& hash,
                            std::span<const uint64_t> blocks, uint64_t seed, int runs,
                            uint64_t iterations) {
    if (runs < 1) throw std::invalid_argument("need at least one workload run");
    std::vector<EvictionEdge> edges;
    for (int r = 0; r < runs; ++r) {
        SlicedCache cache(geom, hash);
        WorkloadConfig cfg;
        cfg.block_addresses.assign(blocks.begin(), blocks.end());
        cfg.shuffle_seed = mix_seed(seed, static_cast<uint64_t>(r), 0);
        cfg.iterations = iterations;
        cfg.dirty_writes = true;
        MemoryTrace trace = run_workload(cache, cfg);
        EdgeExtraction ex = extract_edges(trace);
        edges.insert(edges.end(), ex.edges.begin(), ex.edges.end());
    }
    return connected_components(edges, blocks);
}

AccessHistogram access_histogram(const MemoryTrace& trace, uint64_t seq_begin,
                                 uint64_t seq_end) {
    if (seq_begin > seq_end) throw std::invalid_argument("empty histogram window");
    AccessHistogram h;
    bool any_in_window = false;
    for (const auto& e : trace) {
        if (e.op != TraceEvent::Op::Read) continue;
        h.counts.try_emplace(e.address, 0);
        if (e.seq >= seq_begin && e.seq <= seq_end) {
            ++h.counts[e.address];
            any_in_window = true;
        }
    }
    if (!any_in_window) throw std::invalid_argument("histogram window contains no events");

    double n = static_cast<double>(h.counts.size());
    double mean = 0.0;
    for (const auto& [addr, c] : h.counts) mean += static_cast<double>(c);
    mean /= n;
    double var = 0.0;
    for (const auto& [addr, c] : h.counts) {
        double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    var /= n;
    h.coefficient_of_variation = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
    return h;
}

}  // namespace slicecrack
