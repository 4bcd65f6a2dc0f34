#include "slicecrack/partition.hpp"

#include <numeric>
#include <stdexcept>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slicecrack {

ColorScheme ColorScheme::derive(uint64_t page_size_bytes, const CacheGeometry& geom) {
    if (!std::has_single_bit(page_size_bytes))
        throw std::invalid_argument("page size must be a power of two");
    ColorScheme s;
    s.page_size_bytes = page_size_bytes;
    uint32_t page_bits = static_cast<uint32_t>(std::countr_zero(page_size_bytes));
    uint32_t set_top = geom.a2_shift();  // one past the highest set-index bit
    s.low_bit = std::max(page_bits, geom.offset_bits());
    s.bit_count = set_top > s.low_bit ? set_top - s.low_bit : 0;
    return s;
}

uint64_t page_color(uint64_t pa, const ColorScheme& scheme, const CacheGeometry& geom) {
    if (pa >= geom.addr_limit())
        throw std::out_of_range("physical address exceeds address width");
    return (pa >> scheme.low_bit) & (scheme.color_count() - 1);
}

std::vector<ColorAssignment> plan_partition(std::span<const ClientDemand> demands,
                                            const ColorScheme& scheme) {
    uint64_t total = 0;
    for (const auto& d : demands) total += d.colors;
    if (total > scheme.color_count())
        throw std::invalid_argument("color demand exceeds available colors");
    std::vector<ColorAssignment> plan;
    uint64_t next = 0;
    for (const auto& d : demands) {
        ColorAssignment a{d.client, {}};
        a.colors.resize(d.colors);
        std::iota(a.colors.begin(), a.colors.end(), next);
        next += d.colors;
        plan.push_back(std::move(a));
    }
    return plan;
}

namespace {

// Colors drawn from the set-index field make "different color, same set"
// impossible; a pair violating that is the witness. The slice hash plays no
// role: slices may collide freely across colors.
std::optional<DisjointViolation> check(const ColorScheme& scheme, const CacheGeometry& geom,
                                       std::span<const uint64_t> sample,
                                       std::span<const std::pair<uint64_t, uint64_t>> keys) {
    std::unordered_map<uint64_t, std::pair<uint64_t, uint64_t>> first_in_set;
    for (size_t i = 0; i < sample.size(); ++i) {
        auto [set, color] = keys[i];
        auto [it, inserted] = first_in_set.try_emplace(set, color, sample[i]);
        if (!inserted && it->second.first != color)
            return DisjointViolation{it->second.second, sample[i]};
    }
    return std::nullopt;
}

}  // namespace

std::optional<DisjointViolation> verify_disjoint_serial(const ColorScheme& scheme,
                                                        const CacheGeometry& geom,
                                                        const SliceHash& /*hash*/,
                                                        std::span<const uint64_t> sample) {
    std::vector<std::pair<uint64_t, uint64_t>> keys(sample.size());
    for (size_t i = 0; i < sample.size(); ++i)
        keys[i] = {set_index_of(sample[i], geom), page_color(sample[i], scheme, geom)};
    return check(scheme, geom, sample, keys);
}

std::optional<DisjointViolation> verify_disjoint(const ColorScheme& scheme,
                                                 const CacheGeometry& geom,
                                                 const SliceHash& /*hash*/,
                                                 std::span<const uint64_t> sample) {
    std::vector<std::pair<uint64_t, uint64_t>> keys(sample.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(sample.size()); ++i)
        keys[i] = {set_index_of(sample[i], geom), page_color(sample[i], scheme, geom)};
    return check(scheme, geom, sample, keys);
}

}  // namespace slicecrack
