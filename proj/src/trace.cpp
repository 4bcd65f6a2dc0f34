#include "slicecrack/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace slicecrack {

TraceParseError::TraceParseError(size_t row, const std::string& what)
    : std::runtime_error("trace row " + std::to_string(row) + ": " + what), row(row) {}

void write_trace(const MemoryTrace& trace, std::ostream& out) {
    out << "Seq,ReadOrWrite,PhysicalAddress,Interval\n";
    for (const auto& e : trace) {
        out << e.seq << "," << (e.op == TraceEvent::Op::Read ? "read" : "write") << ","
            << std::hex << e.address << std::dec << "," << e.interval << "\n";
    }
}

MemoryTrace read_trace(std::istream& in) {
    MemoryTrace trace;
    std::string line;
    size_t row = 0;
    uint64_t prev_seq = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (row == 1 && line.rfind("Seq,", 0) == 0) continue;
        std::istringstream ls(line);
        std::string seq_s, op_s, addr_s, int_s;
        if (!std::getline(ls, seq_s, ',') || !std::getline(ls, op_s, ',') ||
            !std::getline(ls, addr_s, ',') || !std::getline(ls, int_s))
            throw TraceParseError(row, "expected 4 comma-separated columns");
        TraceEvent e;
        try {
            e.seq = std::stoull(seq_s);
            e.address = std::stoull(addr_s, nullptr, 16);
            e.interval = std::stoull(int_s);
        } catch (const std::exception&) {
            throw TraceParseError(row, "bad numeric field");
        }
        if (op_s == "read")
            e.op = TraceEvent::Op::Read;
        else if (op_s == "write")
            e.op = TraceEvent::Op::Write;
        else
            throw TraceParseError(row, "op must be read or write, got '" + op_s + "'");
        if (!trace.empty() && e.seq <= prev_seq)
            throw TraceParseError(row, "seq not strictly increasing");
        prev_seq = e.seq;
        trace.push_back(e);
    }
    return trace;
}

}  // namespace slicecrack
