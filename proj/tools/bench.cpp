// Compares the OpenMP kernels against their serial reference
// implementations: color/set disjointness checking and stride scanning.

#include <chrono>
#include <iostream>
#include <random>
#include <vector>

#include "slicecrack/partition.hpp"
#include "slicecrack/solver.hpp"

using namespace slicecrack;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main() {
    CacheGeometry geom{64, 20, 2048, 6, 36, 1ull << 36};
    geom.validate();
    LatencyModel model;

    {
        ColorScheme scheme = ColorScheme::derive(4096, geom);
        LinearGF2 hash{{{1ull << 17, false}}};
        std::mt19937_64 rng(1);
        std::vector<uint64_t> sample(20'000'000);
        uint64_t lines = geom.addr_limit() / geom.line_size_bytes;
        for (auto& s : sample) s = (rng() % lines) * geom.line_size_bytes;

        auto t0 = Clock::now();
        auto v_serial = verify_disjoint_serial(scheme, geom, hash, sample);
        double serial = seconds_since(t0);
        t0 = Clock::now();
        auto v_parallel = verify_disjoint(scheme, geom, hash, sample);
        double parallel = seconds_since(t0);
        if (v_serial.has_value() != v_parallel.has_value()) {
            std::cerr << "verify_disjoint: serial and parallel disagree\n";
            return 1;
        }
        std::cout << "verify_disjoint  " << sample.size() << " addrs: serial " << serial
                  << " s, openmp " << parallel << " s, speedup " << serial / parallel
                  << "x\n";
    }

    {
        std::vector<uint64_t> strides;
        for (uint64_t s = 64; s <= (256ull << 20); s *= 2) strides.push_back(s);
        StrideOracle oracle = analytic_stride_oracle(geom, model);
        double threshold = model.l_llc + 1e-6;

        auto t0 = Clock::now();
        auto r_serial = stride_scan_serial(oracle, strides, 1ull << 22, threshold);
        double serial = seconds_since(t0);
        t0 = Clock::now();
        auto r_parallel = stride_scan(oracle, strides, 1ull << 22, threshold);
        double parallel = seconds_since(t0);
        for (size_t i = 0; i < strides.size(); ++i) {
            if (r_serial.knees[i].knee_count != r_parallel.knees[i].knee_count) {
                std::cerr << "stride_scan: serial and parallel disagree\n";
                return 1;
            }
        }
        std::cout << "stride_scan      " << strides.size() << " strides: serial " << serial
                  << " s, openmp " << parallel << " s, speedup " << serial / parallel
                  << "x\n";
    }
    return 0;
}
