#include "slicecrack/slice_hash.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace slicecrack {

UnmappedAddress::UnmappedAddress(uint64_t a2)
    : std::runtime_error("A2 value 0x" + [](uint64_t v) {
          std::ostringstream os;
          os << std::hex << v;
          return os.str();
      }(a2) + " not present in mapping table"),
      a2_value(a2) {}

namespace {

inline int bit(uint64_t v, unsigned i) { return static_cast<int>((v >> i) & 1); }

}  // namespace

FourCoreBits eval_four_core_formula(uint64_t a2) {
    int a0 = bit(a2, 0) ^ bit(a2, 1) ^ bit(a2, 2) ^ bit(a2, 3) ^ bit(a2, 4) ^
             bit(a2, 5) ^ bit(a2, 7) ^ bit(a2, 9) ^ bit(a2, 10) ^
             (bit(a2, 12) & bit(a2, 14)) ^ ((bit(a2, 14) ^ 1) & bit(a2, 13));
    int a1 = bit(a2, 0) ^ bit(a2, 2) ^ bit(a2, 4) ^ bit(a2, 6) ^ bit(a2, 8) ^
             bit(a2, 10) ^ bit(a2, 11) ^ bit(a2, 13) ^
             (bit(a2, 14) & bit(a2, 13) & bit(a2, 12));
    return {a1, a0};
}

uint32_t slice_of(uint64_t pa, const CacheGeometry& geom, const SliceHash& hash) {
    AddressFields f = split_address(pa, geom);
    struct Visitor {
        uint64_t pa;
        const AddressFields& f;
        const CacheGeometry& geom;

        uint32_t operator()(const LinearGF2& h) const {
            uint32_t slice = 0;
            for (size_t i = 0; i < h.bits.size(); ++i)
                slice |= static_cast<uint32_t>(h.bits[i].eval(pa)) << i;
            return slice;
        }
        uint32_t operator()(const FourCoreFormula&) const {
            FourCoreBits b = eval_four_core_formula(f.a2);
            return static_cast<uint32_t>(b.bit_a1 << 1 | b.bit_a0);
        }
        uint32_t operator()(const GlobalTable& h) const {
            auto it = h.entries.find(f.a2);
            if (it == h.entries.end()) throw UnmappedAddress(f.a2);
            return it->second;
        }
        uint32_t operator()(const PerSetIndexTables& h) const {
            if (f.a1 >= h.table_of_set.size())
                throw std::out_of_range("set index not covered by table family");
            const auto& table = h.tables[h.table_of_set[f.a1]];
            auto it = table.find(f.a2);
            if (it == table.end()) throw UnmappedAddress(f.a2);
            return it->second;
        }
    };
    return std::visit(Visitor{pa, f, geom}, hash);
}

void validate_hash(const SliceHash& hash, const CacheGeometry& geom) {
    uint64_t low_mask = (1ull << geom.a2_shift()) - 1;
    uint64_t width_mask = geom.addr_limit() - 1;
    struct Visitor {
        const CacheGeometry& geom;
        uint64_t low_mask, width_mask;

        void operator()(const LinearGF2& h) const {
            for (const auto& b : h.bits) {
                if (b.mask & low_mask)
                    throw std::invalid_argument("linear mask touches offset or set-index bits");
                if (b.mask & ~width_mask)
                    throw std::invalid_argument("linear mask exceeds address width");
            }
            if (h.bits.size() > 32)
                throw std::invalid_argument("too many output bits");
        }
        void operator()(const FourCoreFormula&) const {
            if (geom.slice_count != 4)
                throw std::invalid_argument("four-core formula requires 4 slices");
        }
        void operator()(const GlobalTable& h) const {
            for (const auto& [a2, slice] : h.entries)
                if (slice >= geom.slice_count)
                    throw std::invalid_argument("table slice id out of range");
        }
        void operator()(const PerSetIndexTables& h) const {
            if (h.table_of_set.size() != geom.sets_per_slice)
                throw std::invalid_argument("table family must cover every set index");
            for (uint32_t id : h.table_of_set)
                if (id >= h.tables.size())
                    throw std::invalid_argument("table id out of range");
            for (const auto& table : h.tables)
                for (const auto& [a2, slice] : table)
                    if (slice >= geom.slice_count)
                        throw std::invalid_argument("table slice id out of range");
        }
    };
    std::visit(Visitor{geom, low_mask, width_mask}, hash);
}

namespace {

void write_one_table(const std::unordered_map<uint64_t, uint32_t>& table,
                     const std::string& set_label, std::ostream& out) {
    std::map<uint64_t, uint32_t> sorted(table.begin(), table.end());
    for (const auto& [a2, slice] : sorted) {
        out << set_label << "," << std::hex << a2 << std::dec << "," << slice << "\n";
    }
}

}  // namespace

void write_hash_tables(const SliceHash& hash, std::ostream& out) {
    out << "set_index,a2_hex,slice_id\n";
    if (const auto* g = std::get_if<GlobalTable>(&hash)) {
        write_one_table(g->entries, "*", out);
    } else if (const auto* p = std::get_if<PerSetIndexTables>(&hash)) {
        for (size_t s = 0; s < p->table_of_set.size(); ++s)
            write_one_table(p->tables[p->table_of_set[s]], std::to_string(s), out);
    } else {
        throw std::invalid_argument("only table-backed hashes serialize as CSV");
    }
}

SliceHash read_hash_tables(std::istream& in, const CacheGeometry& geom) {
    std::string line;
    size_t row = 0;
    bool global = false, per_set = false;
    GlobalTable gt;
    std::vector<std::unordered_map<uint64_t, uint32_t>> raw_tables(geom.sets_per_slice);
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (row == 1 && line.rfind("set_index", 0) == 0) continue;
        std::istringstream ls(line);
        std::string set_s, a2_s, slice_s;
        if (!std::getline(ls, set_s, ',') || !std::getline(ls, a2_s, ',') ||
            !std::getline(ls, slice_s))
            throw std::runtime_error("table CSV row " + std::to_string(row) + ": malformed");
        try {
            uint64_t a2 = std::stoull(a2_s, nullptr, 16);
            uint32_t slice = static_cast<uint32_t>(std::stoul(slice_s));
            if (set_s == "*") {
                global = true;
                gt.entries[a2] = slice;
            } else {
                per_set = true;
                uint64_t set = std::stoull(set_s);
                if (set >= geom.sets_per_slice)
                    throw std::runtime_error("set index out of range");
                raw_tables[set][a2] = slice;
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("table CSV row " + std::to_string(row) + ": " + e.what());
        }
    }
    if (global && per_set)
        throw std::runtime_error("table CSV mixes global and per-set rows");
    if (global) return gt;

    // Deduplicate identical per-set tables into a family.
    PerSetIndexTables fam;
    fam.table_of_set.resize(geom.sets_per_slice, 0);
    std::vector<std::map<uint64_t, uint32_t>> seen;
    for (size_t s = 0; s < raw_tables.size(); ++s) {
        std::map<uint64_t, uint32_t> key(raw_tables[s].begin(), raw_tables[s].end());
        auto it = std::find(seen.begin(), seen.end(), key);
        if (it == seen.end()) {
            seen.push_back(key);
            fam.tables.push_back(raw_tables[s]);
            fam.table_of_set[s] = static_cast<uint32_t>(fam.tables.size() - 1);
        } else {
            fam.table_of_set[s] = static_cast<uint32_t>(it - seen.begin());
        }
    }
    return fam;
}

GlobalTable make_balanced_random_table(const CacheGeometry& geom, uint64_t seed,
                                       uint64_t a2_count) {
    std::vector<uint64_t> a2s(a2_count);
    std::iota(a2s.begin(), a2s.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(a2s.begin(), a2s.end(), rng);
    GlobalTable t;
    for (uint64_t i = 0; i < a2_count; ++i)
        t.entries[a2s[i]] = static_cast<uint32_t>(i % geom.slice_count);
    return t;
}

PerSetIndexTables make_set_dependent_tables(
    const CacheGeometry& geom, uint64_t seed, uint64_t a2_count,
    const std::vector<std::vector<uint32_t>>& set_bit_groups) {
    GlobalTable base = make_balanced_random_table(geom, seed, a2_count);
    if (!std::has_single_bit(a2_count))
        throw std::invalid_argument("a2_count must be a power of two for XOR shifting");
    if ((1ull << set_bit_groups.size()) > a2_count)
        throw std::invalid_argument("more shift bits than the A2 domain can absorb");

    PerSetIndexTables fam;
    fam.table_of_set.resize(geom.sets_per_slice);
    std::map<uint64_t, uint32_t> shift_to_table;
    for (uint64_t s = 0; s < geom.sets_per_slice; ++s) {
        uint64_t shift = 0;
        for (size_t g = 0; g < set_bit_groups.size(); ++g) {
            int b = 0;
            for (uint32_t pos : set_bit_groups[g]) b ^= static_cast<int>((s >> pos) & 1);
            shift |= static_cast<uint64_t>(b) << g;
        }
        auto [it, inserted] = shift_to_table.try_emplace(
            shift, static_cast<uint32_t>(fam.tables.size()));
        if (inserted) {
            std::unordered_map<uint64_t, uint32_t> table;
            for (const auto& [a2, slice] : base.entries)
                table[a2] = base.entries.at(a2 ^ shift);
            fam.tables.push_back(std::move(table));
        }
        fam.table_of_set[s] = it->second;
    }
    return fam;
}

}  // namespace slicecrack
