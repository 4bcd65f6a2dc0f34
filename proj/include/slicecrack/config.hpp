#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slicecrack/cache_sim.hpp"
#include "slicecrack/geometry.hpp"
#include "slicecrack/latency.hpp"
#include "slicecrack/partition.hpp"
#include "slicecrack/slice_hash.hpp"

namespace slicecrack {

// Everything one CLI run needs, loaded from a single JSON config file.
struct RunConfig {
    CacheGeometry geometry;
    LatencyModel latency;
    SliceHash hash;

    WorkloadConfig workload;
    // A2-domain generator: full A2 range [0, a2_count) at each listed set
    // index. Used when the workload gives no explicit address list.
    std::vector<uint64_t> probed_set_indexes{0};
    uint64_t a2_count = 0;

    std::vector<uint64_t> strides;
    uint64_t stride_max_count = 0;

    uint64_t partition_page_size = 4096;
    std::vector<ClientDemand> partition_demands;

    int probe_repeats = 1;

    std::optional<std::string> reference_table_path;

    // Block addresses for one probed set index: every a2 in [0, a2_count).
    std::vector<uint64_t> blocks_at_set_index(uint64_t set_index) const;
};

RunConfig load_run_config(const std::string& path);

}  // namespace slicecrack
