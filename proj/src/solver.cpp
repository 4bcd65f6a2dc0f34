#include "slicecrack/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slicecrack {

// --- stride scan -----------------------------------------------------------

StrideOracle analytic_stride_oracle(const CacheGeometry& geom, const LatencyModel& model) {
    model.validate();
    return [geom, model](uint64_t stride, uint64_t count) {
        if (count == 0) throw std::invalid_argument("block count must be >= 1");
        double capacity = static_cast<double>(expected_resident_capacity(stride, geom));
        double n = static_cast<double>(count);
        double value = n <= capacity ? model.l_llc
                                     : model.l_memory * (n / capacity - 1.0) + model.l_llc;
        if (model.noise_stddev > 0.0) {
            std::mt19937_64 rng(mix_seed(model.rng_seed, stride, count));
            value += std::normal_distribution<double>(0.0, model.noise_stddev)(rng);
        }
        return value;
    };
}

namespace {

StrideKnee scan_one_stride(const StrideOracle& oracle, uint64_t stride, uint64_t max_count,
                           double threshold) {
    StrideKnee k{stride, std::nullopt, std::nullopt};
    if (oracle(stride, max_count) <= threshold) return k;  // inconclusive
    uint64_t lo = 1, hi = max_count;  // invariant: oracle(hi) > threshold
    while (lo < hi) {
        uint64_t mid = lo + (hi - lo) / 2;
        if (oracle(stride, mid) > threshold)
            hi = mid;
        else
            lo = mid + 1;
    }
    k.knee_count = lo;
    k.capacity = lo - 1;
    return k;
}

void infer_bits(StrideScanResult& r, std::span<const uint64_t> strides) {
    if (r.knees.empty()) return;
    uint64_t cap_min = UINT64_MAX;
    for (const auto& k : r.knees) {
        if (!k.capacity) return;  // any inconclusive stride blocks inference
        cap_min = std::min(cap_min, *k.capacity);
    }
    uint64_t stride_sat = 0;
    for (const auto& k : r.knees) {
        if (*k.capacity == cap_min) {
            stride_sat = k.stride;
            break;
        }
    }
    uint64_t base = strides.front();
    if (!std::has_single_bit(base) || !std::has_single_bit(stride_sat) || stride_sat < base)
        return;
    // Assumes the scan starts at the line size, as a full sweep would.
    r.inferred_offset_bits = static_cast<uint32_t>(std::countr_zero(base));
    r.inferred_set_index_bits = static_cast<uint32_t>(std::countr_zero(stride_sat / base));
}

}  // namespace

StrideScanResult stride_scan_serial(const StrideOracle& oracle,
                                    std::span<const uint64_t> strides, uint64_t max_count,
                                    double threshold) {
    StrideScanResult r;
    r.knees.resize(strides.size());
    for (size_t i = 0; i < strides.size(); ++i)
        r.knees[i] = scan_one_stride(oracle, strides[i], max_count, threshold);
    infer_bits(r, strides);
    return r;
}

StrideScanResult stride_scan(const StrideOracle& oracle, std::span<const uint64_t> strides,
                             uint64_t max_count, double threshold) {
    StrideScanResult r;
    r.knees.resize(strides.size());
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(strides.size()); ++i)
        r.knees[i] = scan_one_stride(oracle, strides[i], max_count, threshold);
    infer_bits(r, strides);
    return r;
}

// --- table construction ----------------------------------------------------

MappingTable build_table(const BlockGroups& groups, const CacheGeometry& geom) {
    MappingTable table;
    // (a2, group) pairs sorted by a2 drive the canonical relabeling.
    std::vector<std::pair<uint64_t, uint32_t>> points;
    for (uint32_t id = 0; id < groups.groups.size(); ++id) {
        for (uint64_t addr : groups.groups[id]) {
            AddressFields f = split_address(addr, geom);
            if (!table.set_index)
                table.set_index = f.a1;
            else if (*table.set_index != f.a1)
                throw std::logic_error("group members span multiple set indexes");
            points.emplace_back(f.a2, id);
        }
    }
    std::sort(points.begin(), points.end());
    std::map<uint32_t, uint32_t> relabel;
    for (const auto& [a2, id] : points) {
        auto [it, _] = relabel.try_emplace(id, static_cast<uint32_t>(relabel.size()));
        table.entries[a2] = it->second;
    }
    return table;
}

DedupResult dedup_tables(std::span<const MappingTable> tables) {
    DedupResult out;
    for (const auto& t : tables) {
        if (!t.set_index)
            throw std::invalid_argument("dedup needs per-set-index tables");
        auto it = std::find(out.distinct.begin(), out.distinct.end(), t);
        uint32_t ordinal;
        if (it == out.distinct.end()) {
            ordinal = static_cast<uint32_t>(out.distinct.size());
            out.distinct.push_back(t);
        } else {
            ordinal = static_cast<uint32_t>(it - out.distinct.begin());
        }
        out.ordinal_of_set[*t.set_index] = ordinal;
    }
    return out;
}

// --- GF(2) fitting ---------------------------------------------------------

NeedsMoreData::NeedsMoreData(std::vector<uint32_t> free_bits)
    : std::runtime_error("underdetermined GF(2) system; free bit positions: " +
                         [](const std::vector<uint32_t>& v) {
                             std::ostringstream os;
                             for (size_t i = 0; i < v.size(); ++i)
                                 os << (i ? "," : "") << v[i];
                             return os.str();
                         }(free_bits)),
      free_bit_positions(std::move(free_bits)) {}

namespace {

// Incremental RREF over GF(2); coefficient vectors fit in a uint64
// (address width <= 48 plus one constant column).
struct Gf2Solver {
    std::vector<uint64_t> basis_coeff;  // indexed by pivot column
    std::vector<int> basis_rhs;
    uint64_t inconsistent_rows = 0;

    explicit Gf2Solver(uint32_t columns) : basis_coeff(columns, 0), basis_rhs(columns, 0) {}

    void add_row(uint64_t coeff, int rhs) {
        // Fully reduce against every existing pivot, high to low, so the
        // leftover leading bit is guaranteed to be a fresh column.
        for (int c = static_cast<int>(basis_coeff.size()) - 1; c >= 0; --c) {
            if ((coeff >> c & 1) && basis_coeff[c] != 0) {
                coeff ^= basis_coeff[c];
                rhs ^= basis_rhs[c];
            }
        }
        if (coeff == 0) {
            if (rhs) ++inconsistent_rows;  // 0 = 1: keep the maximal consistent subset
            return;
        }
        uint32_t c = 63 - static_cast<uint32_t>(std::countl_zero(coeff));
        // New pivot; clear its column from every existing row.
        for (uint32_t k = 0; k < basis_coeff.size(); ++k) {
            if (k != c && basis_coeff[k] != 0 && (basis_coeff[k] >> c & 1)) {
                basis_coeff[k] ^= coeff;
                basis_rhs[k] ^= rhs;
            }
        }
        basis_coeff[c] = coeff;
        basis_rhs[c] = rhs;
    }

    // Free variables set to zero; each pivot row then reads off directly.
    uint64_t solution() const {
        uint64_t sol = 0;
        for (uint32_t c = 0; c < basis_coeff.size(); ++c)
            if (basis_coeff[c] != 0 && basis_rhs[c])
                sol |= 1ull << c;
        return sol;
    }

    bool has_pivot(uint32_t c) const { return basis_coeff[c] != 0; }
};

}  // namespace

LinearFit fit_linear_gf2(std::span<const std::pair<uint64_t, uint32_t>> assignments,
                         const CacheGeometry& geom) {
    uint32_t width = geom.addr_width_bits;
    if (assignments.size() < width + 1)
        throw std::invalid_argument("need at least addr_width_bits + 1 assignments");
    uint32_t out_bits = std::max<uint32_t>(1, std::bit_width(geom.slice_count - 1u));
    for (const auto& [addr, slice] : assignments)
        if (slice >= geom.slice_count)
            throw std::invalid_argument("slice id out of range in assignments");

    uint64_t addr_mask = geom.addr_limit() - 1;
    uint64_t varying = 0;
    for (const auto& [addr, slice] : assignments) varying |= (addr ^ assignments[0].first);
    varying &= addr_mask;

    LinearFit fit;
    fit.bits.resize(out_bits);
    bool consistent = true;
    for (uint32_t b = 0; b < out_bits; ++b) {
        Gf2Solver solver(width + 1);
        for (const auto& [addr, slice] : assignments) {
            uint64_t coeff = (addr & addr_mask) | (1ull << width);  // constant column
            solver.add_row(coeff, static_cast<int>(slice >> b & 1));
        }
        if (solver.inconsistent_rows > 0) consistent = false;
        uint64_t sol = solver.solution();
        fit.bits[b].mask = sol & addr_mask;
        fit.bits[b].affine = (sol >> width) & 1;

        if (solver.inconsistent_rows == 0) {
            std::vector<uint32_t> free_bits;
            for (uint32_t c = 0; c < width; ++c)
                if ((varying >> c & 1) && !solver.has_pivot(c)) free_bits.push_back(c);
            if (!free_bits.empty()) throw NeedsMoreData(std::move(free_bits));
        }
    }

    for (const auto& [addr, slice] : assignments) {
        uint32_t predicted = 0;
        for (uint32_t b = 0; b < out_bits; ++b)
            predicted |= static_cast<uint32_t>(fit.bits[b].eval(addr)) << b;
        if (predicted != slice) ++fit.residuals;
    }
    fit.exact = consistent && fit.residuals == 0;
    return fit;
}

// --- equivalence -----------------------------------------------------------

Equivalence equivalent_up_to_permutation(const SliceHash& h1, const SliceHash& h2,
                                         const CacheGeometry& geom,
                                         std::span<const uint64_t> domain) {
    constexpr uint32_t kUnset = UINT32_MAX;
    std::vector<uint32_t> fwd(geom.slice_count, kUnset), rev(geom.slice_count, kUnset);
    for (uint64_t addr : domain) {
        uint32_t s1 = slice_of(addr, geom, h1);
        uint32_t s2 = slice_of(addr, geom, h2);
        if (fwd[s1] == kUnset && rev[s2] == kUnset) {
            fwd[s1] = s2;
            rev[s2] = s1;
        } else if (fwd[s1] != s2) {
            return {false, {}, addr};
        }
    }
    // Complete the partial matching with the unused labels in ascending order.
    std::vector<uint32_t> unused;
    for (uint32_t s = 0; s < geom.slice_count; ++s)
        if (rev[s] == kUnset) unused.push_back(s);
    size_t next = 0;
    for (uint32_t s = 0; s < geom.slice_count; ++s)
        if (fwd[s] == kUnset) fwd[s] = unused[next++];
    return {true, fwd, std::nullopt};
}

// --- consistency report ----------------------------------------------------

ConsistencyReport consistency_report(const FormulaFn& formula, const MappingTable& table,
                                     uint32_t a2_bit_width) {
    auto reverse_bits = [a2_bit_width](uint64_t v) {
        uint64_t r = 0;
        for (uint32_t i = 0; i < a2_bit_width; ++i)
            r |= ((v >> i) & 1) << (a2_bit_width - 1 - i);
        return r;
    };

    ConsistencyReport report;
    for (bool reversed : {false, true}) {
        for (bool swapped : {false, true}) {
            std::vector<uint32_t> perm{0, 1, 2, 3};
            do {
                uint64_t agree = 0;
                for (const auto& [a2, group] : table.entries) {
                    FourCoreBits b = formula(reversed ? reverse_bits(a2) : a2);
                    uint32_t raw = swapped ? static_cast<uint32_t>(b.bit_a0 << 1 | b.bit_a1)
                                           : static_cast<uint32_t>(b.bit_a1 << 1 | b.bit_a0);
                    if (perm[raw] == group) ++agree;
                }
                report.entries.push_back(
                    {reversed, swapped, perm,
                     table.entries.empty()
                         ? 0.0
                         : static_cast<double>(agree) / static_cast<double>(table.entries.size())});
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
    }
    report.best = *std::max_element(report.entries.begin(), report.entries.end(),
                                    [](const ConsistencyEntry& a, const ConsistencyEntry& b) {
                                        return a.agreement < b.agreement;
                                    });
    return report;
}

// --- serialization ---------------------------------------------------------

void write_mapping_tables(std::span<const MappingTable> tables, std::ostream& out) {
    out << "set_index,a2_hex,group_id\n";
    for (const auto& t : tables) {
        std::string label = t.set_index ? std::to_string(*t.set_index) : "*";
        for (const auto& [a2, id] : t.entries)
            out << label << "," << std::hex << a2 << std::dec << "," << id << "\n";
    }
}

void write_dedup(const DedupResult& dedup, std::ostream& out) {
    out << "set_index,table_ordinal\n";
    for (const auto& [set, ordinal] : dedup.ordinal_of_set)
        out << set << "," << ordinal << "\n";
}

std::string format_linear_fit(const LinearFit& fit) {
    std::ostringstream os;
    for (size_t b = 0; b < fit.bits.size(); ++b) {
        os << "slice_bit" << b << " = ";
        bool first = true;
        for (uint32_t i = 0; i < 64; ++i) {
            if (fit.bits[b].mask >> i & 1) {
                os << (first ? "" : " XOR ") << "bit(" << i << ")";
                first = false;
            }
        }
        if (fit.bits[b].affine) {
            if (first)
                os << "1";
            else
                os << " XOR 1";
            first = false;
        }
        if (first) os << "0";
        os << "\n";
    }
    if (!fit.exact) os << "# non-linear: " << fit.residuals << " residual assignments\n";
    return os.str();
}

MappingTable read_mapping_table_csv(std::istream& in) {
    MappingTable table;
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (row == 1 && line.rfind("set_index", 0) == 0) continue;
        std::istringstream ls(line);
        std::string set_s, a2_s, id_s;
        if (!std::getline(ls, set_s, ',') || !std::getline(ls, a2_s, ',') ||
            !std::getline(ls, id_s))
            throw std::runtime_error("mapping table row " + std::to_string(row) + ": malformed");
        if (set_s != "*") table.set_index = std::stoull(set_s);
        table.entries[std::stoull(a2_s, nullptr, 16)] =
            static_cast<uint32_t>(std::stoul(id_s));
    }
    return table;
}

}  // namespace slicecrack
