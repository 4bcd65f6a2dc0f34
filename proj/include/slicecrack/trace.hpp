#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace slicecrack {

// One memory-controller transaction as a trace monitor would record it.
struct TraceEvent {
    uint64_t seq = 0;
    enum class Op { Read, Write } op = Op::Read;
    uint64_t address = 0;
    uint64_t interval = 0;  // abstract ticks since the previous event

    bool operator==(const TraceEvent&) const = default;
};

using MemoryTrace = std::vector<TraceEvent>;

struct TraceParseError : std::runtime_error {
    TraceParseError(size_t row, const std::string& what);
    size_t row;
};

// CSV columns: Seq, ReadOrWrite ("read"/"write"), PhysicalAddress (lowercase
// hex, no prefix), Interval (decimal). Round-trips byte-identically.
void write_trace(const MemoryTrace& trace, std::ostream& out);
MemoryTrace read_trace(std::istream& in);

}  // namespace slicecrack
