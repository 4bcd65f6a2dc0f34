#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "slicecrack/geometry.hpp"

namespace slicecrack {

// Thrown when a table-backed hash is asked about an A2 value it never probed.
struct UnmappedAddress : std::runtime_error {
    explicit UnmappedAddress(uint64_t a2);
    uint64_t a2_value;
};

// One output bit of an affine GF(2) function: XOR of the physical-address
// bits selected by `mask`, optionally complemented.
struct LinearBit {
    uint64_t mask = 0;
    bool affine = false;

    bool eval(uint64_t pa) const {
        return (std::popcount(pa & mask) & 1) ^ static_cast<int>(affine);
    }
    bool operator==(const LinearBit&) const = default;
};

struct LinearGF2 {
    std::vector<LinearBit> bits;  // bits[i] produces bit i of the slice id
};

// The fixed mux/XOR expression recovered for the 4-slice part; no parameters.
struct FourCoreFormula {};

// One A2 -> slice table shared by every set index.
struct GlobalTable {
    std::unordered_map<uint64_t, uint32_t> entries;
};

// Table family keyed by set index; tables[] holds the distinct tables.
struct PerSetIndexTables {
    std::vector<uint32_t> table_of_set;  // set_index -> index into tables
    std::vector<std::unordered_map<uint64_t, uint32_t>> tables;
};

using SliceHash = std::variant<LinearGF2, FourCoreFormula, GlobalTable, PerSetIndexTables>;

struct FourCoreBits {
    int bit_a1 = 0;
    int bit_a0 = 0;
};

// Evaluates the two intermediate bits of the 4-core slice selector.
// Only A2 bits 0..14 participate; anything above is ignored.
FourCoreBits eval_four_core_formula(uint64_t a2);

uint32_t slice_of(uint64_t pa, const CacheGeometry& geom, const SliceHash& hash);

// Checks the structural invariants a hash must satisfy for a geometry:
// table entries below slice_count, linear masks clear of offset/set bits,
// every set index covered by the per-set family.
void validate_hash(const SliceHash& hash, const CacheGeometry& geom);

// Table CSV: set_index ("*" for a global table), a2_hex, slice_id.
void write_hash_tables(const SliceHash& hash, std::ostream& out);
SliceHash read_hash_tables(std::istream& in, const CacheGeometry& geom);

// Planted-hash builders for experiments.

// Random table over a2 in [0, a2_count) with group sizes as equal as the
// division allows (|size difference| <= 1 across slices).
GlobalTable make_balanced_random_table(const CacheGeometry& geom, uint64_t seed, uint64_t a2_count);

// Table family where each set index sees the base random table with its A2
// domain XOR-shifted by a value derived from the chosen set-index bits.
// Each entry of `set_bit_groups` is a list of set-index bit positions whose
// XOR forms one bit of the shift, so grouped positions act only jointly.
PerSetIndexTables make_set_dependent_tables(const CacheGeometry& geom, uint64_t seed,
                                            uint64_t a2_count,
                                            const std::vector<std::vector<uint32_t>>& set_bit_groups);

}  // namespace slicecrack
