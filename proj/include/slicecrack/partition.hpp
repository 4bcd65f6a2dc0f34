#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slicecrack/geometry.hpp"
#include "slicecrack/slice_hash.hpp"

namespace slicecrack {

// Page colors are the set-index bits at or above the page-offset boundary;
// pages of different colors can never share a cache set, whatever the slice
// hash does.
struct ColorScheme {
    uint64_t page_size_bytes = 4096;
    uint32_t low_bit = 12;   // first color bit (page-offset boundary)
    uint32_t bit_count = 0;  // set-index bits above that boundary

    uint64_t color_count() const { return 1ull << bit_count; }

    static ColorScheme derive(uint64_t page_size_bytes, const CacheGeometry& geom);
};

uint64_t page_color(uint64_t pa, const ColorScheme& scheme, const CacheGeometry& geom);

struct ClientDemand {
    std::string client;
    uint64_t colors = 0;
};

struct ColorAssignment {
    std::string client;
    std::vector<uint64_t> colors;
};

// Disjoint contiguous color ranges handed out in client order.
std::vector<ColorAssignment> plan_partition(std::span<const ClientDemand> demands,
                                            const ColorScheme& scheme);

struct DisjointViolation {
    uint64_t addr_a = 0;
    uint64_t addr_b = 0;  // different colors, same (slice, set)
};

// Confirms that differing colors force differing set indexes over the sample.
// Violations are return values, not errors.
std::optional<DisjointViolation> verify_disjoint(const ColorScheme& scheme,
                                                 const CacheGeometry& geom,
                                                 const SliceHash& hash,
                                                 std::span<const uint64_t> sample);
std::optional<DisjointViolation> verify_disjoint_serial(const ColorScheme& scheme,
                                                        const CacheGeometry& geom,
                                                        const SliceHash& hash,
                                                        std::span<const uint64_t> sample);

}  // namespace slicecrack
