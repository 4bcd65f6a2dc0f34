#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "slicecrack/eviction_graph.hpp"
#include "slicecrack/geometry.hpp"
#include "slicecrack/latency.hpp"
#include "slicecrack/slice_hash.hpp"

namespace slicecrack {

// Recovered A2 -> group-id table for one set index (nullopt = all indexes).
// Group ids are canonical: assigned by first occurrence in ascending A2 order.
struct MappingTable {
    std::optional<uint64_t> set_index;
    std::map<uint64_t, uint32_t> entries;

    bool operator==(const MappingTable& other) const { return entries == other.entries; }
};

// --- stride scan -----------------------------------------------------------

struct StrideKnee {
    uint64_t stride = 0;
    std::optional<uint64_t> knee_count;  // nullopt: no knee within the scan range
    std::optional<uint64_t> capacity;    // knee_count - 1
};

struct StrideScanResult {
    std::vector<StrideKnee> knees;
    std::optional<uint32_t> inferred_offset_bits;
    std::optional<uint32_t> inferred_set_index_bits;
};

// Latency of a pointer chase over `count` blocks placed `stride` bytes apart.
using StrideOracle = std::function<double(uint64_t stride, uint64_t count)>;

// Desk-mode oracle: the reachable capacity at a stride acts as one big set.
StrideOracle analytic_stride_oracle(const CacheGeometry& geom, const LatencyModel& model);

// For each stride, finds the smallest block count whose latency exceeds
// `threshold` (binary search; the deterministic model is monotone in count).
// Infers (offset_bits, set_index_bits) from where the knee capacity saturates,
// assuming the smallest stride probed equals the line size.
StrideScanResult stride_scan(const StrideOracle& oracle, std::span<const uint64_t> strides,
                             uint64_t max_count, double threshold);
StrideScanResult stride_scan_serial(const StrideOracle& oracle,
                                    std::span<const uint64_t> strides, uint64_t max_count,
                                    double threshold);

// --- table construction ----------------------------------------------------

// Groups -> canonical mapping table. Every member must share one set index.
MappingTable build_table(const BlockGroups& groups, const CacheGeometry& geom);

struct DedupResult {
    std::vector<MappingTable> distinct;         // ordered by first appearance
    std::map<uint64_t, uint32_t> ordinal_of_set;
};

DedupResult dedup_tables(std::span<const MappingTable> tables);

// --- GF(2) fitting ---------------------------------------------------------

struct NeedsMoreData : std::runtime_error {
    explicit NeedsMoreData(std::vector<uint32_t> free_bits);
    std::vector<uint32_t> free_bit_positions;
};

struct LinearFit {
    bool exact = false;                // residuals == 0 on every assignment
    std::vector<LinearBit> bits;       // per output bit: best affine fit found
    uint64_t residuals = 0;            // assignments where the fit disagrees
};

// Solves each slice-id output bit as an affine GF(2) function of the address
// bits by Gaussian elimination. Exact when the system is consistent;
// otherwise returns the fit from the maximal consistent row subset plus the
// residual count (non-linear verdict).
LinearFit fit_linear_gf2(std::span<const std::pair<uint64_t, uint32_t>> assignments,
                         const CacheGeometry& geom);

// --- equivalence -----------------------------------------------------------

struct Equivalence {
    bool equivalent = false;
    std::vector<uint32_t> permutation;  // permutation[h1 slice] = h2 slice
    std::optional<uint64_t> witness;    // address with no consistent relabeling
};

Equivalence equivalent_up_to_permutation(const SliceHash& h1, const SliceHash& h2,
                                         const CacheGeometry& geom,
                                         std::span<const uint64_t> domain);

// --- consistency report ----------------------------------------------------

struct ConsistencyEntry {
    bool reversed_bits = false;    // feed A2 bits MSB-first instead of LSB-first
    bool swapped_outputs = false;  // slice = (bit_a0 << 1) | bit_a1
    std::vector<uint32_t> permutation;
    double agreement = 0.0;        // fraction of table entries matched
};

struct ConsistencyReport {
    std::vector<ConsistencyEntry> entries;  // all interpretations, deterministic order
    ConsistencyEntry best;
};

using FormulaFn = std::function<FourCoreBits(uint64_t a2)>;

// Scores a two-bit formula against a 4-slice table under every interpretation
// (bit orders x output orders x label permutations). Reports fractions only;
// passes no judgment.
ConsistencyReport consistency_report(const FormulaFn& formula, const MappingTable& table,
                                     uint32_t a2_bit_width = 15);

// --- serialization ---------------------------------------------------------

// tables CSV: set_index,a2_hex,group_id ("*" when set_index is nullopt)
void write_mapping_tables(std::span<const MappingTable> tables, std::ostream& out);
// dedup CSV: set_index,table_ordinal
void write_dedup(const DedupResult& dedup, std::ostream& out);
// formula text: one line per output bit using bit(i), XOR, NOT
std::string format_linear_fit(const LinearFit& fit);

MappingTable read_mapping_table_csv(std::istream& in);

}  // namespace slicecrack
