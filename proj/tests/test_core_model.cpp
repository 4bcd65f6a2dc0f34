#include <random>
#include <sstream>

#include "doctest.h"
#include "slicecrack/geometry.hpp"
#include "slicecrack/latency.hpp"
#include "slicecrack/slice_hash.hpp"

using namespace slicecrack;

namespace {

CacheGeometry six_slice_geometry() {
    return CacheGeometry{64, 20, 2048, 6, 36, 1ull << 36};
}

CacheGeometry four_slice_geometry() {
    return CacheGeometry{64, 20, 2048, 4, 34, 1ull << 34};
}

}  // namespace

TEST_CASE("address split into tag, set index, and line offset") {
    CacheGeometry geom = six_slice_geometry();
    geom.validate();

    AddressFields f = split_address(0, geom);
    CHECK(f.a2 == 0);
    CHECK(f.a1 == 0);
    CHECK(f.a0 == 0);

    f = split_address(0x40, geom);
    CHECK(f.a2 == 0);
    CHECK(f.a1 == 1);
    CHECK(f.a0 == 0);

    f = split_address(0x3f, geom);
    CHECK(f.a2 == 0);
    CHECK(f.a1 == 0);
    CHECK(f.a0 == 0x3f);

    // 0xbfd60000 >> 17 = 0x5feb; set-index field bits 6..16.
    f = split_address(0xbfd60000ull, geom);
    CHECK(f.a2 == 0x5feb);
    CHECK(f.a1 == ((0xbfd60000ull >> 6) & 0x7ff));
    CHECK(f.a0 == 0);

    CHECK_THROWS_AS(split_address(1ull << 36, geom), std::out_of_range);
}

TEST_CASE("split and recompose round-trip") {
    CacheGeometry geom = six_slice_geometry();
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100000; ++i) {
        uint64_t pa = rng() & (geom.addr_limit() - 1);
        CHECK(recompose(split_address(pa, geom), geom) == pa);
    }
}

TEST_CASE("geometry-derived counts") {
    CacheGeometry g6 = six_slice_geometry();
    g6.validate();
    CHECK(g6.offset_bits() == 6);
    CHECK(g6.set_index_bits() == 11);
    CHECK(g6.a2_shift() == 17);
    CHECK(g6.cache_bytes() == 15360ull * 1024);
    CHECK(g6.block_count() == (1ull << 30));
    CHECK(g6.blocks_per_set_index() == (1ull << 19));

    CacheGeometry g4 = four_slice_geometry();
    g4.validate();
    CHECK(g4.cache_bytes() == 10240ull * 1024);
    CHECK(g4.block_count() == (1ull << 28));
    CHECK(g4.blocks_per_set_index() == (1ull << 17));
}

TEST_CASE("geometry validation rejects malformed configurations") {
    CacheGeometry geom = six_slice_geometry();
    geom.line_size_bytes = 48;
    CHECK_THROWS_AS(geom.validate(), std::invalid_argument);
    geom = six_slice_geometry();
    geom.sets_per_slice = 1000;
    CHECK_THROWS_AS(geom.validate(), std::invalid_argument);
    geom = six_slice_geometry();
    geom.associativity = 0;
    CHECK_THROWS_AS(geom.validate(), std::invalid_argument);
    geom = six_slice_geometry();
    geom.addr_width_bits = 20;
    CHECK_THROWS_AS(geom.validate(), std::invalid_argument);
}

TEST_CASE("resident capacity shrinks as the stride pins set-index bits") {
    CacheGeometry geom = six_slice_geometry();
    // stride -> lines resident: halves per stride doubling until one set
    // index remains, then stays at slices * associativity.
    const std::pair<uint64_t, uint64_t> expected[] = {
        {64, 15ull << 14},      {128, 15ull << 13},    {256, 15ull << 12},
        {512, 15ull << 11},     {1ull << 10, 15360},   {2ull << 10, 7680},
        {4ull << 10, 3840},     {8ull << 10, 1920},    {16ull << 10, 960},
        {32ull << 10, 480},     {64ull << 10, 240},    {128ull << 10, 120},
        {256ull << 10, 120},    {512ull << 10, 120},   {1ull << 20, 120},
        {2ull << 20, 120},      {4ull << 20, 120},     {8ull << 20, 120},
    };
    for (const auto& [stride, capacity] : expected)
        CHECK(expected_resident_capacity(stride, geom) == capacity);

    CHECK_THROWS_AS(expected_resident_capacity(32, geom), std::invalid_argument);

    // Degenerate geometry: a single set can still hold one full set of lines.
    CacheGeometry tiny{64, 2, 1, 1, 30, 1ull << 30};
    tiny.validate();
    CHECK(expected_resident_capacity(64, tiny) == 2);
    CHECK(expected_resident_capacity(1ull << 20, tiny) == 2);
}

TEST_CASE("4-core selector bits on frozen inputs") {
    // All-zero input: both bits zero.
    CHECK(eval_four_core_formula(0).bit_a0 == 0);
    CHECK(eval_four_core_formula(0).bit_a1 == 0);

    // Bit 14 alone: absorbed by the mux terms, both bits stay zero.
    CHECK(eval_four_core_formula(0x4000).bit_a0 == 0);
    CHECK(eval_four_core_formula(0x4000).bit_a1 == 0);

    // Bit 13 alone: (~b14)&b13 fires for bit_a0, the direct b13 term for bit_a1.
    CHECK(eval_four_core_formula(0x2000).bit_a0 == 1);
    CHECK(eval_four_core_formula(0x2000).bit_a1 == 1);

    // Bit 0 feeds both outputs.
    CHECK(eval_four_core_formula(1).bit_a0 == 1);
    CHECK(eval_four_core_formula(1).bit_a1 == 1);

    // Bits 12..14 all set: b12&b14 for bit_a0 cancels b13-not path;
    // triple-AND flips bit_a1 on top of the direct b13 term.
    FourCoreBits b = eval_four_core_formula(0x7000);
    CHECK(b.bit_a0 == 1);  // b12&b14 = 1, (~b14)&b13 = 0
    CHECK(b.bit_a1 == 0);  // b13 ^ (b14&b13&b12) = 1 ^ 1

    // Bits above 14 never participate.
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        uint64_t low = rng() & 0x7fff;
        uint64_t high = rng() << 15;
        FourCoreBits a = eval_four_core_formula(low);
        FourCoreBits c = eval_four_core_formula(low | high);
        CHECK(a.bit_a0 == c.bit_a0);
        CHECK(a.bit_a1 == c.bit_a1);
    }
}

TEST_CASE("4-core selector is balanced over the full 15-bit domain") {
    uint64_t count[4] = {0, 0, 0, 0};
    for (uint64_t a2 = 0; a2 < (1ull << 15); ++a2) {
        FourCoreBits b = eval_four_core_formula(a2);
        count[(b.bit_a1 << 1) | b.bit_a0]++;
    }
    for (uint64_t c : count) CHECK(c == (1ull << 13));
}

TEST_CASE("slice_of across hash variants") {
    CacheGeometry geom = four_slice_geometry();

    SUBCASE("empty linear hash maps everything to slice 0") {
        SliceHash h = LinearGF2{{}};
        CHECK(slice_of(0, geom, h) == 0);
        CHECK(slice_of(0xbfd60000ull % geom.addr_limit(), geom, h) == 0);
    }

    SUBCASE("single-mask linear hash tracks one address bit") {
        SliceHash h = LinearGF2{{{1ull << 17, false}}};
        CHECK(slice_of(0, geom, h) == 0);
        CHECK(slice_of(1ull << 17, geom, h) == 1);
        CHECK(slice_of(1ull << 18, geom, h) == 0);
    }

    SUBCASE("affine complement flips the output") {
        SliceHash h = LinearGF2{{{1ull << 17, true}}};
        CHECK(slice_of(0, geom, h) == 1);
        CHECK(slice_of(1ull << 17, geom, h) == 0);
    }

    SUBCASE("formula variant consumes the tag substring only") {
        SliceHash h = FourCoreFormula{};
        // pa = a2 << 17; a2 = 0x2000 -> (bit_a1, bit_a0) = (1, 1) -> slice 3.
        CHECK(slice_of(0x2000ull << 17, geom, h) == 3);
        CHECK(slice_of(0x4000ull << 17, geom, h) == 0);
        // Set-index and offset bits never matter.
        CHECK(slice_of((0x2000ull << 17) | 0x1ffff, geom, h) == 3);
    }

    SUBCASE("global table answers by A2 and throws off-domain") {
        GlobalTable t;
        t.entries[0x4009] = 0;
        t.entries[0x400b] = 2;
        SliceHash h = t;
        CHECK(slice_of(0x4009ull << 17, geom, h) == 0);
        CHECK((slice_of((0x400bull << 17) | 0x40, geom, h)) == 2);
        CHECK_THROWS_AS(slice_of(0x4000ull << 17, geom, h), UnmappedAddress);
    }

    SUBCASE("per-set-index family dispatches on the set index") {
        PerSetIndexTables f;
        f.tables.resize(2);
        f.tables[0][5] = 1;
        f.tables[1][5] = 3;
        f.table_of_set.assign(geom.sets_per_slice, 0);
        f.table_of_set[7] = 1;
        SliceHash h = f;
        uint64_t even_set = recompose({5, 0, 0}, geom);
        uint64_t odd_set = recompose({5, 7, 0}, geom);
        CHECK(slice_of(even_set, geom, h) == 1);
        CHECK(slice_of(odd_set, geom, h) == 3);
    }
}

TEST_CASE("hash validation enforces structural invariants") {
    CacheGeometry geom = four_slice_geometry();

    GlobalTable bad;
    bad.entries[1] = 4;  // >= slice_count
    CHECK_THROWS_AS(validate_hash(SliceHash(bad), geom), std::invalid_argument);

    // A linear mask touching set-index bits breaks the set/slice separation.
    LinearGF2 overlap{{{1ull << 10, false}}};
    CHECK_THROWS_AS(validate_hash(SliceHash(overlap), geom), std::invalid_argument);

    PerSetIndexTables partial;
    partial.tables.resize(1);
    partial.table_of_set.assign(geom.sets_per_slice / 2, 0);  // not every set covered
    CHECK_THROWS_AS(validate_hash(SliceHash(partial), geom), std::invalid_argument);

    LinearGF2 good{{{1ull << 17, false}, {1ull << 20, true}}};
    CHECK_NOTHROW(validate_hash(SliceHash(good), geom));
    CHECK_NOTHROW(validate_hash(SliceHash(FourCoreFormula{}), geom));
}

TEST_CASE("hash table CSV round-trip") {
    CacheGeometry geom = four_slice_geometry();
    GlobalTable t;
    for (uint64_t a2 = 0; a2 < 64; ++a2) t.entries[a2] = static_cast<uint32_t>(a2 % 4);
    std::ostringstream os;
    write_hash_tables(SliceHash(t), os);
    std::istringstream is(os.str());
    SliceHash back = read_hash_tables(is, geom);
    REQUIRE(std::holds_alternative<GlobalTable>(back));
    CHECK(std::get<GlobalTable>(back).entries == t.entries);
}

TEST_CASE("balanced random table deals group sizes within one of each other") {
    CacheGeometry geom = six_slice_geometry();
    GlobalTable t = make_balanced_random_table(geom, 42, 128);
    REQUIRE(t.entries.size() == 128);
    std::vector<uint64_t> sizes(6, 0);
    for (const auto& [a2, s] : t.entries) {
        REQUIRE(s < 6);
        sizes[s]++;
    }
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<uint64_t>{21, 21, 21, 21, 22, 22});

    // Deterministic under the seed, different under another.
    CHECK(make_balanced_random_table(geom, 42, 128).entries == t.entries);
    CHECK(make_balanced_random_table(geom, 43, 128).entries != t.entries);
}

TEST_CASE("set-dependent family shifts the base table by grouped set bits") {
    CacheGeometry geom{64, 20, 128, 6, 34, 1ull << 34};
    geom.validate();
    std::vector<std::vector<uint32_t>> groups{{0, 6}, {2}, {3}, {4}, {5}};
    PerSetIndexTables f = make_set_dependent_tables(geom, 9, 128, groups);
    REQUIRE(f.table_of_set.size() == 128);
    for (uint32_t id : f.table_of_set) REQUIRE(id < f.tables.size());

    // Set bits 0 and 6 act jointly, so sets 0x00 and 0x41 share a table;
    // bit 1 is unused, so sets 0 and 2 share one as well.
    CHECK(f.table_of_set[0x00] == f.table_of_set[0x41]);
    CHECK(f.table_of_set[0x00] == f.table_of_set[0x02]);
    CHECK(f.table_of_set[0x00] != f.table_of_set[0x01]);
}

TEST_CASE("latency plateau and overflow ramp") {
    LatencyModel m{40.0, 200.0, 0.0, 0};
    m.validate();
    CHECK(latency_mean(1, 20, m) == 40.0);
    CHECK(latency_mean(10, 20, m) == 40.0);
    CHECK(latency_mean(20, 20, m) == 40.0);  // exactly at capacity
    CHECK(latency_mean(40, 20, m) == doctest::Approx(240.0).epsilon(1e-12));
    CHECK(latency_mean(21, 20, m) == doctest::Approx(40.0 + 200.0 / 20.0).epsilon(1e-12));
    CHECK_THROWS_AS(latency_mean(0, 20, m), std::invalid_argument);

    LatencyModel bad{200.0, 40.0, 0.0, 0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {40.0, 200.0, -1.0, 0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("noisy latency is deterministic per (seed, n, draw)") {
    CacheGeometry geom = six_slice_geometry();
    LatencyModel m{40.0, 200.0, 5.0, 11};
    double a = latency(10, geom, m, 0);
    CHECK(latency(10, geom, m, 0) == a);
    CHECK(latency(10, geom, m, 1) != a);
    m.rng_seed = 12;
    CHECK(latency(10, geom, m, 0) != a);

    // Noise averages to zero: empirical mean near the deterministic value.
    double sum = 0;
    for (uint64_t d = 0; d < 20000; ++d) sum += latency(10, geom, m, d);
    CHECK(sum / 20000 == doctest::Approx(40.0).epsilon(0.01));
}
