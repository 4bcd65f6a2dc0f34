// Command-line front end: simulate, classify, crack, probe, verify and
// partition against a planted slice hash, emitting CSV artifacts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "slicecrack/cache_sim.hpp"
#include "slicecrack/config.hpp"
#include "slicecrack/eviction_graph.hpp"
#include "slicecrack/partition.hpp"
#include "slicecrack/probe.hpp"
#include "slicecrack/solver.hpp"

namespace fs = std::filesystem;
using namespace slicecrack;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed;
    std::optional<double> noise;
    std::string trace_path;
};

RunConfig load(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts.config_path);
    if (opts.seed) {
        cfg.workload.shuffle_seed = *opts.seed;
        cfg.latency.rng_seed = *opts.seed;
    }
    if (opts.noise) cfg.latency.noise_stddev = *opts.noise;
    cfg.latency.validate();
    fs::create_directories(opts.out_dir);
    return cfg;
}

std::vector<uint64_t> workload_blocks(const RunConfig& cfg) {
    if (!cfg.workload.block_addresses.empty()) return cfg.workload.block_addresses;
    std::vector<uint64_t> blocks;
    for (uint64_t set : cfg.probed_set_indexes) {
        auto b = cfg.blocks_at_set_index(set);
        blocks.insert(blocks.end(), b.begin(), b.end());
    }
    return blocks;
}

void write_groups_csv(const BlockGroups& groups, std::ostream& out) {
    out << "group_id,address_hex\n";
    for (uint32_t id = 0; id < groups.groups.size(); ++id)
        for (uint64_t addr : groups.groups[id])
            out << id << "," << std::hex << addr << std::dec << "\n";
}

std::string perm_to_string(const std::vector<uint32_t>& perm) {
    std::ostringstream os;
    for (size_t i = 0; i < perm.size(); ++i) os << (i ? " " : "") << i << "->" << perm[i];
    return os.str();
}

// Each recovered group must be exactly one (slice, set) preimage of the
// planted hash; anything else is a pipeline bug, not a measurement issue.
bool purity_ok(const BlockGroups& groups, const CacheGeometry& geom, const SliceHash& hash) {
    std::map<std::pair<uint32_t, uint64_t>, uint32_t> owner;
    for (uint32_t id = 0; id < groups.groups.size(); ++id) {
        std::optional<std::pair<uint32_t, uint64_t>> bucket;
        for (uint64_t addr : groups.groups[id]) {
            std::pair<uint32_t, uint64_t> b{slice_of(addr, geom, hash),
                                            set_index_of(addr, geom)};
            if (bucket && *bucket != b) return false;  // mixed group
            bucket = b;
        }
        auto [it, inserted] = owner.try_emplace(*bucket, id);
        if (!inserted) return false;  // split bucket
    }
    return true;
}

int cmd_stride_scan(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    std::vector<uint64_t> strides = cfg.strides;
    if (strides.empty())
        for (uint64_t s = cfg.geometry.line_size_bytes; s <= (8u << 20); s *= 2)
            strides.push_back(s);
    StrideOracle oracle = analytic_stride_oracle(cfg.geometry, cfg.latency);
    double threshold = cfg.latency.l_llc + 1e-6;
    StrideScanResult r = stride_scan(oracle, strides, cfg.stride_max_count, threshold);

    std::ofstream out(fs::path(opts.out_dir) / "knees.csv");
    out << "stride,knee_count,capacity\n";
    for (const auto& k : r.knees) {
        out << k.stride << ",";
        if (k.knee_count)
            out << *k.knee_count << "," << *k.capacity << "\n";
        else
            out << ",\n";
    }
    if (r.inferred_set_index_bits)
        std::cout << "inferred offset_bits=" << *r.inferred_offset_bits
                  << " set_index_bits=" << *r.inferred_set_index_bits << "\n";
    else
        std::cout << "inference inconclusive\n";
    return 0;
}

int cmd_gen_trace(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    WorkloadConfig wl = cfg.workload;
    wl.block_addresses = workload_blocks(cfg);
    SlicedCache cache(cfg.geometry, cfg.hash);
    WorkloadStats stats;
    MemoryTrace trace = run_workload(cache, wl, &stats);
    std::ofstream out(fs::path(opts.out_dir) / "trace.csv");
    write_trace(trace, out);
    std::cout << "events=" << trace.size() << " hits=" << stats.hits
              << " misses=" << stats.misses << " writebacks=" << stats.writebacks << "\n";
    return 0;
}

int cmd_classify(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    std::string trace_path = opts.trace_path.empty()
                                 ? (fs::path(opts.out_dir) / "trace.csv").string()
                                 : opts.trace_path;
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "cannot open trace: " << trace_path << "\n";
        return kExitConfig;
    }
    MemoryTrace trace = read_trace(in);
    EdgeExtraction ex = extract_edges(trace);
    std::vector<uint64_t> nodes;
    for (const auto& e : trace) nodes.push_back(e.address);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    BlockGroups groups = connected_components(ex.edges, nodes);

    std::ofstream gout(fs::path(opts.out_dir) / "groups.csv");
    write_groups_csv(groups, gout);
    std::ofstream dout(fs::path(opts.out_dir) / "diagnostics.csv");
    dout << "kind,value\n";
    for (uint64_t seq : ex.unpaired_write_seqs) dout << "unpaired_write_seq," << seq << "\n";
    for (uint32_t id = 0; id < groups.groups.size(); ++id)
        if (groups.unclassified[id])
            dout << "unclassified,0x" << std::hex << groups.groups[id].front() << std::dec
                 << "\n";
    std::cout << "groups=" << groups.groups.size() << " edges=" << ex.edges.size()
              << " unpaired_writes=" << ex.unpaired_write_seqs.size() << "\n";
    return 0;
}

struct CrackOutput {
    std::vector<MappingTable> tables;
    DedupResult dedup;
    std::optional<LinearFit> fit;
    Equivalence equivalence;
    bool pure = true;
};

CrackOutput run_crack_pipeline(const RunConfig& cfg) {
    CrackOutput out;
    std::vector<std::pair<uint64_t, uint32_t>> assignments;
    std::vector<uint64_t> domain;
    PerSetIndexTables recovered;
    recovered.table_of_set.resize(cfg.geometry.sets_per_slice, UINT32_MAX);

    for (uint64_t set : cfg.probed_set_indexes) {
        std::vector<uint64_t> blocks = cfg.blocks_at_set_index(set);
        BlockGroups groups =
            classify_blocks(cfg.geometry, cfg.hash, blocks, cfg.workload.shuffle_seed, 3,
                            std::max<uint64_t>(2, cfg.workload.iterations));
        if (!purity_ok(groups, cfg.geometry, cfg.hash)) out.pure = false;
        MappingTable table = build_table(groups, cfg.geometry);
        for (const auto& [a2, id] : table.entries) {
            uint64_t addr = recompose({a2, set, 0}, cfg.geometry);
            assignments.emplace_back(addr, id);
            domain.push_back(addr);
        }
        std::unordered_map<uint64_t, uint32_t> t(table.entries.begin(), table.entries.end());
        recovered.tables.push_back(std::move(t));
        recovered.table_of_set[set] =
            static_cast<uint32_t>(recovered.tables.size() - 1);
        out.tables.push_back(std::move(table));
    }
    out.dedup = dedup_tables(out.tables);

    // Unprobed set indexes reuse table 0 so the family stays total.
    for (auto& id : recovered.table_of_set)
        if (id == UINT32_MAX) id = 0;

    if (assignments.size() > cfg.geometry.addr_width_bits) {
        try {
            out.fit = fit_linear_gf2(assignments, cfg.geometry);
        } catch (const NeedsMoreData&) {
            out.fit = std::nullopt;
        }
    }
    out.equivalence =
        equivalent_up_to_permutation(SliceHash(recovered), cfg.hash, cfg.geometry, domain);
    return out;
}

int cmd_crack(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    if (cfg.a2_count == 0 && cfg.workload.block_addresses.empty()) {
        std::cerr << "no events: workload is empty\n";
        return kExitConfig;
    }
    CrackOutput out = run_crack_pipeline(cfg);
    if (!out.pure) {
        std::cerr << "classification purity violated (pipeline bug)\n";
        return kExitInvariant;
    }

    std::ofstream tout(fs::path(opts.out_dir) / "tables.csv");
    write_mapping_tables(out.tables, tout);
    std::ofstream dout(fs::path(opts.out_dir) / "dedup.csv");
    write_dedup(out.dedup, dout);
    if (out.fit) {
        std::ofstream fout(fs::path(opts.out_dir) / "formula.txt");
        fout << format_linear_fit(*out.fit);
    }

    std::cout << "distinct_tables=" << out.dedup.distinct.size() << "\n";
    if (out.fit && out.fit->exact)
        std::cout << "formula:\n" << format_linear_fit(*out.fit);
    if (out.equivalence.equivalent)
        std::cout << "EQUIVALENT (perm=" << perm_to_string(out.equivalence.permutation)
                  << ")\n";
    else
        std::cout << "NOT EQUIVALENT witness=0x" << std::hex << *out.equivalence.witness
                  << std::dec << "\n";
    return 0;
}

int cmd_probe(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    DeskOracle oracle(cfg.geometry, cfg.hash, cfg.latency);
    std::vector<uint64_t> pool = cfg.blocks_at_set_index(cfg.probed_set_indexes.front());
    BlockGroups groups =
        crack_without_trace(oracle, pool, cfg.geometry.associativity, cfg.probe_repeats);
    std::ofstream gout(fs::path(opts.out_dir) / "probe_groups.csv");
    write_groups_csv(groups, gout);
    std::cout << "groups=" << groups.groups.size() << " probe_calls=" << oracle.calls()
              << "\n";
    return 0;
}

int cmd_partition(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    ColorScheme scheme = ColorScheme::derive(cfg.partition_page_size, cfg.geometry);
    auto plan = plan_partition(cfg.partition_demands, scheme);
    std::ofstream pout(fs::path(opts.out_dir) / "partition.csv");
    pout << "client,color_id\n";
    for (const auto& a : plan)
        for (uint64_t c : a.colors) pout << a.client << "," << c << "\n";

    std::mt19937_64 rng(cfg.latency.rng_seed);
    std::vector<uint64_t> sample(100000);
    uint64_t lines = cfg.geometry.addr_limit() / cfg.geometry.line_size_bytes;
    for (auto& s : sample) s = (rng() % lines) * cfg.geometry.line_size_bytes;
    auto violation = verify_disjoint(scheme, cfg.geometry, cfg.hash, sample);
    if (violation) {
        std::cout << "disjoint: VIOLATION 0x" << std::hex << violation->addr_a << " vs 0x"
                  << violation->addr_b << std::dec << "\n";
        return kExitInvariant;
    }
    std::cout << "disjoint: ok (" << scheme.color_count() << " colors)\n";
    return 0;
}

int cmd_report(const CommonOpts& opts) {
    RunConfig cfg = load(opts);
    std::ostringstream rep;
    const auto& g = cfg.geometry;
    rep << "geometry: line=" << g.line_size_bytes << "B assoc=" << g.associativity
        << " sets=" << g.sets_per_slice << " slices=" << g.slice_count
        << " addr_bits=" << g.addr_width_bits << "\n"
        << "cache_bytes=" << g.cache_bytes() << " n_block=" << g.block_count()
        << " blocks_per_set_index=" << g.blocks_per_set_index() << "\n";

    if (!cfg.strides.empty()) {
        StrideOracle oracle = analytic_stride_oracle(g, cfg.latency);
        StrideScanResult r =
            stride_scan(oracle, cfg.strides, cfg.stride_max_count, cfg.latency.l_llc + 1e-6);
        rep << "knees:\n";
        for (const auto& k : r.knees) {
            rep << "  stride=" << k.stride << " ";
            if (k.knee_count)
                rep << "knee=" << *k.knee_count << " capacity=" << *k.capacity << "\n";
            else
                rep << "inconclusive\n";
        }
    }

    if (cfg.a2_count > 0) {
        CrackOutput out = run_crack_pipeline(cfg);
        rep << "distinct_tables=" << out.dedup.distinct.size() << "\n";
        if (out.fit) rep << format_linear_fit(*out.fit);
        rep << (out.equivalence.equivalent ? "equivalence: yes\n" : "equivalence: NO\n");
    }

    if (cfg.reference_table_path) {
        std::ifstream rin(*cfg.reference_table_path);
        if (!rin) {
            std::cerr << "cannot open reference table\n";
            return kExitConfig;
        }
        MappingTable ref = read_mapping_table_csv(rin);
        ConsistencyReport cr = consistency_report(
            [](uint64_t a2) { return eval_four_core_formula(a2); }, ref);
        rep << "consistency vs reference table (best of " << cr.entries.size()
            << " interpretations): " << cr.best.agreement << "\n";
        rep << "  reversed_bits=" << cr.best.reversed_bits
            << " swapped_outputs=" << cr.best.swapped_outputs
            << " perm=" << perm_to_string(cr.best.permutation) << "\n";
    }
    if (cfg.geometry.addr_width_bits > 30)
        rep << "note: address bits above 30 probed only if the workload covers them\n";

    std::ofstream rout(fs::path(opts.out_dir) / "report.txt");
    rout << rep.str();
    std::cout << rep.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sliced-LLC hash cracking toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string command;
    for (const char* name :
         {"stride-scan", "gen-trace", "classify", "crack", "probe", "partition", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "run config JSON")->required();
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed, "override workload and model seeds");
        sub->add_option("--noise", opts.noise, "override latency noise stddev");
        if (std::string(name) == "classify")
            sub->add_option("--trace", opts.trace_path, "input trace CSV");
        sub->callback([&command, name]() { command = name; });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        if (command == "stride-scan") return cmd_stride_scan(opts);
        if (command == "gen-trace") return cmd_gen_trace(opts);
        if (command == "classify") return cmd_classify(opts);
        if (command == "crack") return cmd_crack(opts);
        if (command == "probe") return cmd_probe(opts);
        if (command == "partition") return cmd_partition(opts);
        if (command == "report") return cmd_report(opts);
    } catch (const std::logic_error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
