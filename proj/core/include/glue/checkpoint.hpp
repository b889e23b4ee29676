#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glue/dataset.hpp"
#include "glue/graph.hpp"
#include "glue/model.hpp"

namespace glue {

// Everything needed to resume detection without the training split: the
// hyperparameters and trained blocks, the final adjacency snapshot, the
// sensor names and normalization statistics the model was fitted against,
// and the seed that produced it.
struct Checkpoint {
    std::uint64_t seed = 0;
    GlueParams params;
    Adjacency adjacency;
    std::vector<std::string> sensor_names;
    std::vector<NormStat> norm_stats;
};

// Versioned little-endian binary blob; save/load round-trips bitwise
// (doubles are stored by bit pattern, never reformatted).
void save_checkpoint(const Checkpoint& ckp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace glue
