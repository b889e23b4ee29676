#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

enum class DatasetKind { generic, wadi, nasa };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

// Per-sensor standardization statistics, always computed on the training
// split (population standard deviation).
struct NormStat {
    double mean = 0.0;
    double std = 1.0;
};

// A fully preprocessed series: filled, (optionally) downsampled, variance
// filtered and standardized. Immutable by convention once built.
struct TimeSeriesDataset {
    std::vector<std::string> sensor_names;
    Matrix values;           // T x N
    std::vector<int> labels; // empty, or one {0,1} entry per time step
    std::vector<std::size_t> trajectory_starts;  // {0, ...} when T > 0
    std::vector<NormStat> norm_stats;            // training-split stats, one per sensor
    std::vector<std::string> dropped_sensors;    // removed by the variance filter

    std::size_t n_times() const { return values.rows(); }
    std::size_t n_sensors() const { return values.cols(); }
    bool has_labels() const { return !labels.empty(); }
    std::vector<std::pair<std::size_t, std::size_t>> trajectories() const;

    // Checks the structural invariants (finite values, label length,
    // ordered trajectory starts, matching metadata sizes); throws on
    // violation.
    void validate() const;
};

// Train and test splits sharing sensor set and normalization stats.
struct DatasetBundle {
    DatasetKind kind = DatasetKind::generic;
    TimeSeriesDataset train;
    TimeSeriesDataset test;
};

// Undo standardization for one sensor or a whole T x N block.
double denormalize(double v, const NormStat& s);
Matrix denormalize(const Matrix& values, const std::vector<NormStat>& stats);

// One gathered minibatch: for every selected target time t the input is the
// N x w history (columns are times t-w .. t-1) and the target is the N-row
// of readings at t.
struct WindowBatch {
    std::vector<Matrix> inputs;  // B entries, each N x w
    Matrix targets;              // B x N
    std::vector<std::size_t> target_times;
    std::vector<int> target_labels;  // empty when the dataset is unlabeled

    std::size_t size() const { return inputs.size(); }
};

// Lazy view over every valid (history, target) pair of a dataset. Windows
// never span a trajectory boundary.
class WindowSet {
  public:
    WindowSet(const TimeSeriesDataset& ds, std::size_t w, std::size_t stride = 1);
    // A WindowSet is a view; it must not outlive the dataset.
    WindowSet(TimeSeriesDataset&&, std::size_t, std::size_t = 1) = delete;

    std::size_t size() const { return targets_.size(); }
    std::size_t window() const { return w_; }
    std::size_t n_sensors() const { return ds_->n_sensors(); }
    std::size_t target_time(std::size_t i) const { return targets_[i]; }
    const TimeSeriesDataset& dataset() const { return *ds_; }

    // `order` holds indices into [0, size()); the batch preserves its order.
    WindowBatch gather(std::span<const std::size_t> order) const;
    WindowBatch all() const;

  private:
    const TimeSeriesDataset* ds_;
    std::size_t w_;
    std::vector<std::size_t> targets_;
};

WindowSet make_windows(const TimeSeriesDataset& ds, std::size_t w = 5, std::size_t stride = 1);
WindowSet make_windows(TimeSeriesDataset&&, std::size_t = 5, std::size_t = 1) = delete;

// Persistence: `dir/train.bin`, `dir/test.bin` (versioned binary arrays) and
// `dir/dataset.json` (names, stats, kind). Round-trips bitwise.
void save_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_bundle(const std::string& dir);

}  // namespace glue
