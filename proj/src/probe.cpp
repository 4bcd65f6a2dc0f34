#include "slicecrack/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace slicecrack {

double LatencyOracle::measure_subset(std::span<const uint64_t> all,
                                     std::span<const uint64_t> /*probed*/) {
    return measure_once(all);
}

DeskOracle::DeskOracle(const CacheGeometry& geom, SliceHash hash, LatencyModel model,
                       uint64_t chase_iterations)
    : geom_(geom),
      hash_(std::move(hash)),
      model_(model),
      chase_iterations_(std::max<uint64_t>(1, chase_iterations)),
      rng_(model.rng_seed) {
    geom_.validate();
    model_.validate();
    validate_hash(hash_, geom_);
    // Midpoint of the first post-knee latency step.
    threshold_ = model_.l_llc + 0.5 * model_.l_memory / geom_.associativity;
}

double DeskOracle::mean_over(std::span<const uint64_t> all, std::span<const uint64_t> probed) {
    if (probed.empty()) throw std::invalid_argument("no blocks to measure");
    ++calls_;
    std::map<std::pair<uint32_t, uint64_t>, uint64_t> occupancy;
    for (uint64_t b : all) {
        if (b % geom_.line_size_bytes != 0)
            throw std::invalid_argument("block address not line-aligned");
        occupancy[{slice_of(b, geom_, hash_), set_index_of(b, geom_)}]++;
    }
    double sum = 0.0;
    for (uint64_t b : probed)
        sum += latency_mean(occupancy[{slice_of(b, geom_, hash_), set_index_of(b, geom_)}],
                            geom_.associativity, model_);
    double mean = sum / static_cast<double>(probed.size());
    if (model_.noise_stddev > 0.0) {
        // Averaging across blocks and chase iterations shrinks the noise.
        double sigma = model_.noise_stddev /
                       std::sqrt(static_cast<double>(probed.size() * chase_iterations_));
        mean += std::normal_distribution<double>(0.0, sigma)(rng_);
    }
    return mean;
}

double DeskOracle::measure_once(std::span<const uint64_t> blocks) {
    return mean_over(blocks, blocks);
}

double DeskOracle::measure_subset(std::span<const uint64_t> all,
                                  std::span<const uint64_t> probed) {
    return mean_over(all, probed);
}

std::vector<uint64_t> DeskOracle::same_bucket_blocks(uint32_t slice, uint64_t set_index,
                                                     size_t count) const {
    std::vector<uint64_t> out;
    uint64_t a2_limit = 1ull << geom_.a2_bits();
    for (uint64_t a2 = 0; a2 < a2_limit && out.size() < count; ++a2) {
        uint64_t addr = recompose({a2, set_index, 0}, geom_);
        try {
            if (slice_of(addr, geom_, hash_) == slice) out.push_back(addr);
        } catch (const UnmappedAddress&) {
            break;  // table hashes cover a bounded A2 prefix
        }
    }
    if (out.size() < count)
        throw std::runtime_error("planted hash cannot supply enough same-bucket blocks");
    return out;
}

double measure(LatencyOracle& oracle, std::span<const uint64_t> blocks, int repeats) {
    if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    std::vector<double> samples(repeats);
    for (int r = 0; r < repeats; ++r) samples[r] = oracle.measure_once(blocks);
    std::nth_element(samples.begin(), samples.begin() + repeats / 2, samples.end());
    return samples[repeats / 2];
}

namespace {

// Conflict test at any candidate size: the one-bucket-overfull signal dilutes
// with the candidate size, so the margin above the all-hit level scales too.
struct ConflictTest {
    double baseline;
    double step;  // threshold margin at the natural size of associativity + 1
    uint32_t assoc;

    bool operator()(double measured, size_t n) const {
        return measured > baseline + step * static_cast<double>(assoc + 1) /
                              static_cast<double>(n);
    }
};

}  // namespace

BlockGroups crack_without_trace(LatencyOracle& oracle, std::span<const uint64_t> pool,
                                uint32_t associativity, int repeats) {
    if (pool.size() < associativity)
        throw std::invalid_argument("pool too small to seed any eviction set");
    std::vector<uint64_t> remaining(pool.begin(), pool.end());
    std::sort(remaining.begin(), remaining.end());

    // A pool that exactly fills one eviction set can never show a conflict;
    // it is a single group by construction.
    if (remaining.size() == associativity) {
        BlockGroups out;
        for (uint64_t m : remaining) out.labeling[m] = 0;
        out.unclassified.push_back(false);
        out.groups.push_back(std::move(remaining));
        return out;
    }

    // Baseline from a single block: the all-hit latency.
    double baseline = measure(oracle, std::span(remaining.data(), 1), repeats);
    ConflictTest conflict{baseline, oracle.threshold() - baseline, associativity};

    std::vector<std::vector<uint64_t>> groups;
    bool first_round = true;
    while (remaining.size() > associativity) {
        std::vector<uint64_t> cand = remaining;
        if (!conflict(measure(oracle, cand, repeats), cand.size())) {
            if (first_round)
                throw std::invalid_argument("pool does not cover a full eviction set");
            break;
        }
        first_round = false;

        // Prune to a minimal conflicting core of associativity + 1 blocks.
        size_t i = 0;
        while (cand.size() > associativity + 1 && i < cand.size()) {
            std::vector<uint64_t> tmp;
            tmp.reserve(cand.size() - 1);
            for (size_t j = 0; j < cand.size(); ++j)
                if (j != i) tmp.push_back(cand[j]);
            if (conflict(measure(oracle, tmp, repeats), tmp.size()))
                cand = std::move(tmp);
            else
                ++i;
        }

        // Membership test: the core minus one block, plus the candidate.
        std::set<uint64_t> group(cand.begin(), cand.end());
        std::vector<uint64_t> test(cand.begin(), cand.begin() + associativity);
        test.push_back(0);
        for (uint64_t u : remaining) {
            if (group.count(u)) continue;
            test.back() = u;
            if (conflict(measure(oracle, test, repeats), test.size())) group.insert(u);
        }
        groups.emplace_back(group.begin(), group.end());
        std::erase_if(remaining, [&](uint64_t b) { return group.count(b) > 0; });
    }

    // Leftovers could not be grouped with the oracle alone.
    for (uint64_t b : remaining) groups.push_back({b});

    // Same canonical labeling contract as the trace pipeline.
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    BlockGroups out;
    for (uint32_t id = 0; id < groups.size(); ++id) {
        for (uint64_t m : groups[id]) out.labeling[m] = id;
        out.unclassified.push_back(groups[id].size() == 1 && pool.size() > 1);
        out.groups.push_back(std::move(groups[id]));
    }
    return out;
}

std::optional<uint32_t> two_thread_experiment(DeskOracle& oracle, uint32_t k, uint32_t m_max,
                                              bool same_set, int repeats) {
    if (k > 4) throw std::invalid_argument("thread 1 pins at most 4 blocks");
    const uint64_t t1_set = 0;
    const uint64_t t2_set = same_set ? t1_set : 1;
    const uint32_t slice = 0;

    std::vector<uint64_t> t1 = oracle.same_bucket_blocks(slice, t1_set, k);
    std::vector<uint64_t> bucket2 =
        oracle.same_bucket_blocks(slice, t2_set, (same_set ? k : 0) + m_max);
    // Skip any blocks thread 1 already owns.
    std::vector<uint64_t> t2_pool;
    for (uint64_t b : bucket2)
        if (std::find(t1.begin(), t1.end(), b) == t1.end()) t2_pool.push_back(b);

    for (uint32_t m = 1; m <= m_max; ++m) {
        std::vector<uint64_t> all = t1;
        all.insert(all.end(), t2_pool.begin(), t2_pool.begin() + m);
        std::span<const uint64_t> probed(all.data() + t1.size(), m);
        std::vector<double> samples(repeats);
        for (int r = 0; r < repeats; ++r) samples[r] = oracle.measure_subset(all, probed);
        std::nth_element(samples.begin(), samples.begin() + repeats / 2, samples.end());
        if (samples[repeats / 2] > oracle.threshold()) return m;
    }
    return std::nullopt;
}

}  // namespace slicecrack
