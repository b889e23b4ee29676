#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

// Generator for a 5-sensor system with known cross-sensor dependencies, used
// by the demo pipeline and the end-to-end acceptance checks. Two independent
// drivers (s0, s2) move on different periods; s1, s3 and s4 follow them with
// short lags:
//   s1(t) = 0.8 s0(t-1),   s3(t) = 0.5 s0(t-2) + 0.3 s1(t-1),
//   s4(t) = -0.9 s2(t-1),  all plus Gaussian noise.
// The planted dependency edges are therefore 0->1, 0->3, 1->3 and 2->4.
struct SyntheticConfig {
    std::size_t train_rows = 2000;
    std::size_t test_rows = 1000;
    double anomaly_rate = 0.05;  // fraction of test rows covered by segments
    // Long segments keep the label set honest for pointwise scoring: a
    // forecaster's inputs stay contaminated for w rows after a segment ends,
    // so each boundary costs a few unavoidable false alarms. Fewer, longer
    // segments bound that cost while covering the same anomalous fraction.
    std::size_t segment_len = 25;
    double shift_sigmas = 6.0;  // level shift, in robust-sigma (IQR) units
    double noise_std = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSeries {
    std::vector<std::string> sensor_names;  // s0..s4
    Matrix train;                           // train_rows x 5, anomaly free
    Matrix test;                            // test_rows x 5, with planted shifts
    std::vector<int> train_labels;          // all zero
    std::vector<int> test_labels;           // 1 on planted rows
    // src -> dst pairs the generator wired up; recovery means src appears
    // among dst's learned neighbors.
    std::vector<std::pair<std::size_t, std::size_t>> planted_edges;
};

// Deterministic in the seed: one RNG drives noise (time-major) and then
// anomaly placement. Anomalies are non-overlapping level-shift segments on a
// single sensor each, of magnitude shift_sigmas x that sensor's training IQR.
SyntheticSeries make_synthetic(const SyntheticConfig& cfg = {});

// Writes dir/train.csv, dir/test.csv (timestamp,s0..s4,label) and
// dir/manifest.ini referencing them by relative path.
void write_synthetic(const SyntheticSeries& series, const SyntheticConfig& cfg,
                     const std::string& dir);

}  // namespace glue
