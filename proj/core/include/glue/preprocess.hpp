#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "glue/csv.hpp"
#include "glue/dataset.hpp"

namespace glue {

// Stage 1 — per sensor and per trajectory: forward-fill, then back-fill,
// then fill whatever is still missing with zero. Afterwards the table holds
// no missing markers.
void fill_missing(RawTable& table);

// Stage 2 (high-rate data only) — reduce non-overlapping blocks of
// `block_rows` consecutive rows (within a trajectory) to their per-sensor
// median; a trailing partial block reduces over the rows it has. A block's
// label is 1 when any of its rows is labeled 1.
RawTable downsample_median(const RawTable& table, std::size_t block_rows = 10);

// Stage 3 — remove sensors whose values are constant over the training
// split, from both splits. Returns the dropped names; throws NumericError
// when nothing would remain.
std::vector<std::string> drop_zero_variance(RawTable& train, RawTable& test);

// Stage 4 — standardize both splits with training-split mean and population
// std. Returns per-sensor stats; throws NumericError on a zero std (cannot
// happen after stage 3).
std::vector<NormStat> normalize(RawTable& train, RawTable& test);

struct PreprocessOptions {
    DatasetKind kind = DatasetKind::generic;
    std::size_t downsample_block = 10;  // used only for DatasetKind::wadi
};

// Runs the full fixed-order pipeline: fill -> (wadi) downsample -> variance
// filter -> normalize, and packages the result. Deterministic: identical
// inputs give bitwise-identical bundles.
DatasetBundle preprocess(RawTable train, RawTable test, const PreprocessOptions& opt = {});

}  // namespace glue
