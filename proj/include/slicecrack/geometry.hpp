#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>

namespace slicecrack {

// Geometry of a sliced last-level cache plus the installed memory it backs.
// All derived counts (offset/set-index widths, block counts) come from here.
struct CacheGeometry {
    uint64_t line_size_bytes = 64;
    uint32_t associativity = 20;
    uint64_t sets_per_slice = 2048;
    uint32_t slice_count = 1;
    uint32_t addr_width_bits = 34;
    uint64_t memory_bytes = 1ull << 34;

    uint32_t offset_bits() const {
        return static_cast<uint32_t>(std::countr_zero(line_size_bytes));
    }
    uint32_t set_index_bits() const {
        return static_cast<uint32_t>(std::countr_zero(sets_per_slice));
    }
    // Lowest physical-address bit belonging to the tag-side substring.
    uint32_t a2_shift() const { return offset_bits() + set_index_bits(); }
    uint32_t a2_bits() const { return addr_width_bits - a2_shift(); }

    uint64_t cache_bytes() const {
        return line_size_bytes * associativity * sets_per_slice * slice_count;
    }
    uint64_t block_count() const { return memory_bytes / line_size_bytes; }
    uint64_t blocks_per_set_index() const { return block_count() / sets_per_slice; }
    uint64_t addr_limit() const { return 1ull << addr_width_bits; }

    void validate() const {
        if (!std::has_single_bit(line_size_bytes))
            throw std::invalid_argument("line size must be a power of two");
        if (!std::has_single_bit(sets_per_slice))
            throw std::invalid_argument("sets per slice must be a power of two");
        if (associativity == 0) throw std::invalid_argument("associativity must be positive");
        if (slice_count == 0) throw std::invalid_argument("slice count must be >= 1");
        if (addr_width_bits < 30 || addr_width_bits > 48)
            throw std::invalid_argument("address width must be in 30..48 bits");
        if (memory_bytes % line_size_bytes != 0)
            throw std::invalid_argument("memory size not divisible by line size");
        if (block_count() % sets_per_slice != 0)
            throw std::invalid_argument("block count not divisible by sets per slice");
        if (a2_shift() >= addr_width_bits)
            throw std::invalid_argument("offset+set-index bits exceed address width");
    }
};

// (A2, A1, A0) substrings of a physical address: tag-side selector,
// set index within a slice, and byte offset within the line.
struct AddressFields {
    uint64_t a2 = 0;
    uint64_t a1 = 0;
    uint64_t a0 = 0;
};

inline AddressFields split_address(uint64_t pa, const CacheGeometry& geom) {
    if (pa >= geom.addr_limit())
        throw std::out_of_range("physical address exceeds address width");
    AddressFields f;
    f.a0 = pa & (geom.line_size_bytes - 1);
    f.a1 = (pa >> geom.offset_bits()) & (geom.sets_per_slice - 1);
    f.a2 = pa >> geom.a2_shift();
    return f;
}

inline uint64_t recompose(const AddressFields& f, const CacheGeometry& geom) {
    return (f.a2 << geom.a2_shift()) | (f.a1 << geom.offset_bits()) | f.a0;
}

inline uint64_t set_index_of(uint64_t pa, const CacheGeometry& geom) {
    return split_address(pa, geom).a1;
}

// Number of lines the cache can hold when walking memory with a fixed stride:
// a large stride pins the set index, shrinking the reachable portion.
inline uint64_t expected_resident_capacity(uint64_t stride_bytes, const CacheGeometry& geom) {
    if (stride_bytes < geom.line_size_bytes)
        throw std::invalid_argument("stride below line size");
    uint64_t line_step = stride_bytes / geom.line_size_bytes;
    uint64_t reachable_sets = geom.sets_per_slice / std::min<uint64_t>(geom.sets_per_slice, line_step);
    if (reachable_sets == 0) reachable_sets = 1;
    return static_cast<uint64_t>(geom.slice_count) * geom.associativity * reachable_sets;
}

}  // namespace slicecrack
