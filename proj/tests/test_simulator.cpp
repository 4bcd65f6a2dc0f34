#include <random>
#include <sstream>

#include "doctest.h"
#include "slicecrack/cache_sim.hpp"
#include "slicecrack/trace.hpp"

using namespace slicecrack;

namespace {

// Single slice, single set keeps replacement behavior directly observable.
CacheGeometry one_set_geometry(uint32_t associativity) {
    CacheGeometry g{64, associativity, 1, 1, 30, 1ull << 30};
    g.validate();
    return g;
}

CacheGeometry one_slice_geometry() {
    CacheGeometry g{64, 20, 2048, 1, 34, 1ull << 34};
    g.validate();
    return g;
}

std::vector<uint64_t> blocks_in_set(const CacheGeometry& geom, uint64_t set_index,
                                    size_t count) {
    std::vector<uint64_t> out;
    for (uint64_t a2 = 0; a2 < count; ++a2)
        out.push_back(recompose({a2, set_index, 0}, geom));
    return out;
}

}  // namespace

TEST_CASE("chain is a deterministic permutation of the workload blocks") {
    WorkloadConfig cfg;
    cfg.block_addresses = blocks_in_set(one_slice_geometry(), 3, 120);
    cfg.shuffle_seed = 5;
    std::vector<uint64_t> chain = build_chain(cfg);
    CHECK(chain == build_chain(cfg));
    std::vector<uint64_t> sorted = chain;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == cfg.block_addresses);

    cfg.shuffle_seed = 6;
    CHECK(build_chain(cfg) != chain);

    cfg.block_addresses = {64};
    CHECK(build_chain(cfg) == std::vector<uint64_t>{64});

    cfg.block_addresses = {64, 64};
    CHECK_THROWS_AS(build_chain(cfg), std::invalid_argument);
    cfg.block_addresses.clear();
    CHECK_THROWS_AS(build_chain(cfg), std::invalid_argument);
}

TEST_CASE("LRU replacement evicts the least recently used line") {
    SlicedCache cache(one_set_geometry(2), LinearGF2{{}});
    CHECK_FALSE(cache.access(0x000, false).hit);
    CHECK_FALSE(cache.access(0x040, false).hit);
    CHECK(cache.access(0x000, false).hit);  // promotes A over B

    AccessResult r = cache.access(0x080, false);
    CHECK_FALSE(r.hit);
    REQUIRE(r.evicted.has_value());
    CHECK(r.evicted->first == 0x040);   // B was least recently used
    CHECK_FALSE(r.evicted->second);     // clean line, no write-back

    CHECK(cache.access(0x000, false).hit);
    CHECK_FALSE(cache.access(0x040, false).hit);  // B really left

    CHECK_THROWS_AS(cache.access(0x041, false), std::invalid_argument);
}

TEST_CASE("dirty lines force a write-back on eviction") {
    SlicedCache cache(one_set_geometry(2), LinearGF2{{}});
    cache.access(0x000, false);
    cache.access(0x000, true);  // dirty A
    cache.access(0x040, false);
    AccessResult r = cache.access(0x080, false);
    REQUIRE(r.evicted.has_value());
    CHECK(r.evicted->first == 0x000);
    CHECK(r.evicted->second);  // dirty
}

TEST_CASE("dirty-retain policy victimizes clean lines first") {
    SlicedCache cache(one_set_geometry(3), LinearGF2{{}}, ReplacementPolicy::DirtyRetain);
    cache.access(0x000, false);
    cache.access(0x000, true);  // A dirty
    cache.access(0x040, false); // B clean
    cache.access(0x080, false);
    cache.access(0x080, true);  // C dirty
    AccessResult r = cache.access(0x0c0, false);
    REQUIRE(r.evicted.has_value());
    CHECK(r.evicted->first == 0x040);  // the only clean line goes, not the LRU

    // With all lines dirty the newest line is sacrificed, so the older dirty
    // lines keep their slots (the source of non-uniform retention).
    cache.access(0x0c0, true);
    r = cache.access(0x100, false);
    REQUIRE(r.evicted.has_value());
    CHECK(r.evicted->first == 0x0c0);
}

TEST_CASE("occupancy never exceeds associativity") {
    CacheGeometry geom = one_slice_geometry();
    SlicedCache cache(geom, LinearGF2{{}});
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20000; ++i) {
        uint64_t a2 = rng() % 64;
        uint64_t set = rng() % 4;
        cache.access(recompose({a2, set, 0}, geom), rng() % 2 == 0);
    }
    for (uint64_t set = 0; set < 4; ++set) CHECK(cache.occupancy(0, set) <= 20);
    CHECK(cache.occupancy(0, 1) == 20);  // 64 hot blocks keep each set full
}

TEST_CASE("working set at capacity goes silent after warm-up") {
    CacheGeometry geom = one_slice_geometry();
    SlicedCache cache(geom, LinearGF2{{}});
    WorkloadConfig cfg;
    cfg.block_addresses = blocks_in_set(geom, 0, 20);
    cfg.iterations = 4;
    WorkloadStats stats;
    MemoryTrace trace = run_workload(cache, cfg, &stats);
    CHECK(stats.misses == 20);  // cold fills only
    CHECK(stats.steady_misses == 0);
    CHECK(stats.writebacks == 0);
    CHECK(trace.size() == 20);
    for (const auto& e : trace) CHECK(e.op == TraceEvent::Op::Read);
}

TEST_CASE("one block over capacity thrashes every access under LRU") {
    CacheGeometry geom = one_slice_geometry();
    SlicedCache cache(geom, LinearGF2{{}});
    WorkloadConfig cfg;
    cfg.block_addresses = blocks_in_set(geom, 0, 21);
    cfg.iterations = 3;
    WorkloadStats stats;
    run_workload(cache, cfg, &stats);
    // Cyclic order + LRU: the next block needed is always the one just evicted.
    CHECK(stats.steady_misses == 2 * 21);
    CHECK(stats.steady_hits == 0);
    CHECK(stats.writebacks == 0);  // clean workload never writes back
}

TEST_CASE("polluted workload pairs each steady fill with a write-back") {
    CacheGeometry geom = one_slice_geometry();
    SlicedCache cache(geom, LinearGF2{{}});
    WorkloadConfig cfg;
    cfg.block_addresses = blocks_in_set(geom, 0, 21);
    cfg.iterations = 3;
    cfg.dirty_writes = true;
    cfg.idle_gap = 1000;
    WorkloadStats stats;
    MemoryTrace trace = run_workload(cache, cfg, &stats);
    CHECK(stats.steady_misses == stats.steady_writebacks);
    CHECK(stats.steady_misses == 2 * 21);

    // Read fill first, its write-back next, strictly increasing seq, and the
    // idle gap folded into the write interval.
    uint64_t prev_seq = 0;
    for (size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].seq > prev_seq);
        prev_seq = trace[i].seq;
        if (trace[i].op == TraceEvent::Op::Write) {
            REQUIRE(i > 0);
            CHECK(trace[i - 1].op == TraceEvent::Op::Read);
            CHECK(trace[i].interval == 600 + 1000);
            CHECK(trace[i].address != trace[i - 1].address);
        } else {
            CHECK(trace[i].interval == 15);
        }
    }
}

TEST_CASE("fills equal misses and write-backs never exceed misses") {
    CacheGeometry geom = one_slice_geometry();
    std::mt19937_64 rng(17);
    for (int round = 0; round < 5; ++round) {
        SlicedCache cache(geom, LinearGF2{{}},
                          round % 2 ? ReplacementPolicy::DirtyRetain
                                    : ReplacementPolicy::LruMruInsert);
        WorkloadConfig cfg;
        cfg.block_addresses = blocks_in_set(geom, round, 18 + rng() % 10);
        cfg.iterations = 3;
        cfg.dirty_writes = round % 2 == 1;
        cfg.shuffle_seed = rng();
        WorkloadStats stats;
        MemoryTrace trace = run_workload(cache, cfg, &stats);
        uint64_t reads = 0, writes = 0;
        for (const auto& e : trace)
            (e.op == TraceEvent::Op::Read ? reads : writes)++;
        CHECK(reads == stats.misses);
        CHECK(writes == stats.writebacks);
        CHECK(writes <= stats.misses);
    }
}

TEST_CASE("trace CSV round-trips byte-identically") {
    MemoryTrace trace{
        {1, TraceEvent::Op::Read, 0xbfd60000, 15},
        {2, TraceEvent::Op::Write, 0xbe1a0000, 1094},
        {3, TraceEvent::Op::Read, 0xbfd80000, 15},
    };
    std::ostringstream os;
    write_trace(trace, os);
    CHECK(os.str() ==
          "Seq,ReadOrWrite,PhysicalAddress,Interval\n"
          "1,read,bfd60000,15\n"
          "2,write,be1a0000,1094\n"
          "3,read,bfd80000,15\n");
    std::istringstream is(os.str());
    CHECK(read_trace(is) == trace);

    std::ostringstream os2;
    std::istringstream is2(os.str());
    write_trace(read_trace(is2), os2);
    CHECK(os2.str() == os.str());
}

TEST_CASE("trace round-trip holds for large random traces") {
    std::mt19937_64 rng(23);
    MemoryTrace trace;
    uint64_t seq = 0;
    for (int i = 0; i < 100000; ++i) {
        seq += 1 + rng() % 3;
        trace.push_back({seq,
                         rng() % 2 ? TraceEvent::Op::Write : TraceEvent::Op::Read,
                         (rng() & 0x3ffffffffull) & ~0x3full, rng() % 2000});
    }
    std::stringstream ss;
    write_trace(trace, ss);
    CHECK(read_trace(ss) == trace);
}

TEST_CASE("trace parser reports the offending row") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_trace(in);
    };
    CHECK(parse("").empty());
    CHECK(parse("Seq,ReadOrWrite,PhysicalAddress,Interval\n").empty());

    try {
        parse("Seq,ReadOrWrite,PhysicalAddress,Interval\n1,read,40,15\n2,load,80,15\n");
        FAIL("expected TraceParseError");
    } catch (const TraceParseError& e) {
        CHECK(e.row == 3);
    }
    try {
        parse("1,read,40,15\n1,read,80,15\n");
        FAIL("expected TraceParseError");
    } catch (const TraceParseError& e) {
        CHECK(e.row == 2);  // seq must strictly increase
    }
    CHECK_THROWS_AS(parse("1,read\n"), TraceParseError);
    CHECK_THROWS_AS(parse("x,read,40,15\n"), TraceParseError);
}
