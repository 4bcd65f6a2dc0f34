#include "slicecrack/cache_sim.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

namespace slicecrack {

namespace {
constexpr uint64_t kReadFillTicks = 15;
constexpr uint64_t kWritebackTicks = 600;
}  // namespace

std::vector<uint64_t> build_chain(const WorkloadConfig& config) {
    if (config.block_addresses.empty())
        throw std::invalid_argument("workload needs at least one block address");
    std::set<uint64_t> uniq(config.block_addresses.begin(), config.block_addresses.end());
    if (uniq.size() != config.block_addresses.size())
        throw std::invalid_argument("duplicate block addresses in workload");
    std::vector<uint64_t> chain = config.block_addresses;
    std::mt19937_64 rng(config.shuffle_seed);
    std::shuffle(chain.begin(), chain.end(), rng);
    return chain;
}

SlicedCache::SlicedCache(const CacheGeometry& geom, SliceHash hash, ReplacementPolicy policy)
    : geom_(geom), hash_(std::move(hash)), policy_(policy) {
    geom_.validate();
    validate_hash(hash_, geom_);
    sets_.resize(static_cast<size_t>(geom_.slice_count) * geom_.sets_per_slice);
}

std::vector<SlicedCache::Line>& SlicedCache::set_for(uint64_t address) {
    uint64_t set = set_index_of(address, geom_);
    uint32_t slice = slice_of(address, geom_, hash_);
    return sets_[static_cast<size_t>(slice) * geom_.sets_per_slice + set];
}

size_t SlicedCache::occupancy(uint32_t slice, uint64_t set_index) const {
    return sets_[static_cast<size_t>(slice) * geom_.sets_per_slice + set_index].size();
}

AccessResult SlicedCache::access(uint64_t address, bool is_write) {
    if (address % geom_.line_size_bytes != 0)
        throw std::invalid_argument("address not line-aligned");
    auto& set = set_for(address);

    for (size_t i = 0; i < set.size(); ++i) {
        if (set[i].address == address) {
            Line line = set[i];
            line.dirty |= is_write;
            set.erase(set.begin() + i);
            set.push_back(line);  // promote to MRU
            return {true, std::nullopt};
        }
    }

    AccessResult result{false, std::nullopt};
    if (set.size() == geom_.associativity) {
        size_t victim = 0;  // LRU
        if (policy_ == ReplacementPolicy::DirtyRetain) {
            auto clean = std::find_if(set.begin(), set.end(),
                                      [](const Line& l) { return !l.dirty; });
            // All dirty: retain the established lines, sacrifice the newest.
            victim = clean != set.end() ? static_cast<size_t>(clean - set.begin())
                                        : set.size() - 1;
        }
        result.evicted = {set[victim].address, set[victim].dirty};
        set.erase(set.begin() + victim);
    }
    set.push_back({address, is_write});
    return result;
}

MemoryTrace run_workload(SlicedCache& cache, const WorkloadConfig& config,
                         WorkloadStats* stats) {
    std::vector<uint64_t> chain = build_chain(config);
    MemoryTrace trace;
    WorkloadStats local;
    uint64_t seq = 1;
    for (uint64_t lap = 0; lap < config.iterations; ++lap) {
        bool steady = lap > 0;
        for (uint64_t addr : chain) {
            AccessResult r = cache.access(addr, false);
            if (config.dirty_writes) cache.access(addr, true);  // hits, dirties the line
            if (r.hit) {
                ++local.hits;
                if (steady) ++local.steady_hits;
                continue;
            }
            ++local.misses;
            if (steady) ++local.steady_misses;
            trace.push_back({seq++, TraceEvent::Op::Read, addr, kReadFillTicks});
            if (r.evicted && r.evicted->second) {
                ++local.writebacks;
                if (steady) ++local.steady_writebacks;
                trace.push_back({seq++, TraceEvent::Op::Write, r.evicted->first,
                                 kWritebackTicks + config.idle_gap});
            }
        }
    }
    if (stats) *stats = local;
    return trace;
}

}  // namespace slicecrack
