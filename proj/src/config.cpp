#include "slicecrack/config.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace slicecrack {

namespace {

using nlohmann::json;

uint64_t parse_u64(const json& v) {
    if (v.is_string()) return std::stoull(v.get<std::string>(), nullptr, 0);
    return v.get<uint64_t>();
}

CacheGeometry parse_geometry(const json& j) {
    CacheGeometry g;
    g.line_size_bytes = parse_u64(j.at("line_size"));
    g.associativity = j.at("associativity").get<uint32_t>();
    g.sets_per_slice = parse_u64(j.at("sets_per_slice"));
    g.slice_count = j.at("slices").get<uint32_t>();
    g.addr_width_bits = j.at("addr_bits").get<uint32_t>();
    g.memory_bytes = parse_u64(j.at("memory"));
    g.validate();
    return g;
}

SliceHash parse_hash(const json& j, const CacheGeometry& geom) {
    std::string variant = j.at("variant").get<std::string>();
    SliceHash hash;
    if (variant == "linear") {
        LinearGF2 h;
        for (const auto& bj : j.at("bits")) {
            LinearBit b;
            for (const auto& pos : bj.at("mask_bits")) b.mask |= 1ull << pos.get<uint32_t>();
            b.affine = bj.value("affine", false);
            h.bits.push_back(b);
        }
        hash = h;
    } else if (variant == "four_core") {
        hash = FourCoreFormula{};
    } else if (variant == "global_table") {
        if (j.contains("csv")) {
            std::ifstream in(j.at("csv").get<std::string>());
            if (!in) throw std::runtime_error("cannot open table CSV");
            hash = read_hash_tables(in, geom);
        } else {
            GlobalTable t;
            for (const auto& [a2, slice] : j.at("entries").items())
                t.entries[std::stoull(a2, nullptr, 16)] = slice.get<uint32_t>();
            hash = t;
        }
    } else if (variant == "per_set_index") {
        std::ifstream in(j.at("csv").get<std::string>());
        if (!in) throw std::runtime_error("cannot open table CSV");
        hash = read_hash_tables(in, geom);
    } else if (variant == "random_table") {
        hash = make_balanced_random_table(geom, parse_u64(j.at("seed")),
                                          parse_u64(j.at("a2_count")));
    } else if (variant == "set_dependent") {
        std::vector<std::vector<uint32_t>> groups;
        for (const auto& gj : j.at("set_bit_groups"))
            groups.push_back(gj.get<std::vector<uint32_t>>());
        hash = make_set_dependent_tables(geom, parse_u64(j.at("seed")),
                                         parse_u64(j.at("a2_count")), groups);
    } else {
        throw std::runtime_error("unknown hash variant: " + variant);
    }
    validate_hash(hash, geom);
    return hash;
}

}  // namespace

std::vector<uint64_t> RunConfig::blocks_at_set_index(uint64_t set_index) const {
    std::vector<uint64_t> blocks;
    blocks.reserve(a2_count);
    for (uint64_t a2 = 0; a2 < a2_count; ++a2)
        blocks.push_back(recompose({a2, set_index, 0}, geometry));
    return blocks;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);

    RunConfig cfg;
    cfg.geometry = parse_geometry(j.at("geometry"));

    if (j.contains("latency")) {
        const auto& lj = j["latency"];
        cfg.latency.l_llc = lj.value("l_llc", 40.0);
        cfg.latency.l_memory = lj.value("l_memory", 200.0);
        cfg.latency.noise_stddev = lj.value("noise", 0.0);
        cfg.latency.rng_seed = lj.value("seed", 0ull);
    }
    cfg.latency.validate();

    if (j.contains("hash"))
        cfg.hash = parse_hash(j["hash"], cfg.geometry);
    else
        cfg.hash = LinearGF2{{}};  // constant slice 0

    if (j.contains("workload")) {
        const auto& wj = j["workload"];
        cfg.workload.shuffle_seed = wj.value("seed", 0ull);
        cfg.workload.iterations = wj.value("iterations", 2ull);
        cfg.workload.dirty_writes = wj.value("dirty_writes", true);
        cfg.workload.idle_gap = wj.value("idle_gap", 1000ull);
        if (wj.contains("addresses")) {
            for (const auto& a : wj["addresses"])
                cfg.workload.block_addresses.push_back(parse_u64(a));
        } else if (wj.contains("stride_gen")) {
            const auto& sg = wj["stride_gen"];
            uint64_t base = parse_u64(sg.at("base"));
            uint64_t stride = parse_u64(sg.at("stride"));
            uint64_t count = parse_u64(sg.at("count"));
            for (uint64_t i = 0; i < count; ++i)
                cfg.workload.block_addresses.push_back(base + i * stride);
        } else if (wj.contains("bit_gen")) {
            const auto& bg = wj["bit_gen"];
            uint64_t base = bg.contains("base") ? parse_u64(bg["base"]) : 0;
            std::vector<uint32_t> bits = bg.at("bits").get<std::vector<uint32_t>>();
            for (uint64_t combo = 0; combo < (1ull << bits.size()); ++combo) {
                uint64_t addr = base;
                for (size_t i = 0; i < bits.size(); ++i)
                    if (combo >> i & 1) addr |= 1ull << bits[i];
                cfg.workload.block_addresses.push_back(addr);
            }
        }
        if (wj.contains("set_indexes"))
            cfg.probed_set_indexes = wj["set_indexes"].get<std::vector<uint64_t>>();
        cfg.a2_count = wj.value("a2_count", 0ull);
    }

    if (j.contains("strides"))
        for (const auto& s : j["strides"]) cfg.strides.push_back(parse_u64(s));
    cfg.stride_max_count = j.value("stride_max_count", 1ull << 20);

    if (j.contains("partition")) {
        const auto& pj = j["partition"];
        cfg.partition_page_size = pj.value("page_size", 4096ull);
        for (const auto& dj : pj.at("demands"))
            cfg.partition_demands.push_back(
                {dj.at("client").get<std::string>(), parse_u64(dj.at("colors"))});
    }

    cfg.probe_repeats = j.value("probe_repeats", 1);
    if (j.contains("reference_table"))
        cfg.reference_table_path = j["reference_table"].get<std::string>();
    return cfg;
}

}  // namespace slicecrack
