#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glue/matrix.hpp"
#include "glue/metrics.hpp"

namespace glue {

// Per-sensor robust location/scale of the training-split absolute forecast
// errors: median and interquartile range (floored so division stays finite).
struct RobustStats {
    std::vector<double> median;
    std::vector<double> iqr;

    std::size_t n_sensors() const { return median.size(); }
};

// Fits median and (Q3 - Q1) per column with the toolkit quantile convention;
// iqr entries are floored at iqr_floor. Requires at least 4 rows.
RobustStats robust_stats(const Matrix& train_abs_errors, double iqr_floor = 1e-6);

// |truth - forecast|, entrywise.
Matrix absolute_errors(const Matrix& forecast, const Matrix& truth);

// Max Robust Error for one timestep: max_i (err_i - median_i) / iqr_i along
// with the sensor attaining it (ties go to the lower index).
struct MreScore {
    double value = 0.0;
    std::size_t argmax = 0;
};
MreScore mre(std::span<const double> abs_errors, const RobustStats& stats);

// mre() applied to every row of a T x N error matrix.
struct ScoreSeries {
    std::vector<double> value;
    std::vector<std::size_t> argmax;

    std::size_t size() const { return value.size(); }
};
ScoreSeries mre_series(const Matrix& abs_errors, const RobustStats& stats);

// tau = (1 - rate)-quantile of the training scores (linear interpolation).
// rate must lie strictly inside (0, 1); scores must be non-empty.
double fit_threshold(std::span<const double> train_scores, double rate);

// Label 1 iff score strictly exceeds tau: a point exactly at the training
// quantile is, by construction, ordinary.
std::vector<int> detect(std::span<const double> scores, double threshold);

// One model's complete anomaly-detection outcome on a train/test split.
// Every model (graph forecasters and baselines alike) emits this same shape
// through the same threshold/detect path.
struct AnomalyReport {
    std::string model;
    double threshold = 0.0;
    double anomaly_rate = 0.0;

    std::vector<std::size_t> train_times;
    std::vector<double> train_scores;

    std::vector<std::size_t> test_times;
    std::vector<double> test_scores;
    std::vector<std::size_t> argmax_sensor;  // empty for undecomposed scorers
    std::vector<int> predicted;              // detect(test_scores, threshold)
    std::vector<int> truth;                  // empty when the split is unlabeled

    std::vector<std::string> sensor_names;  // optional; prettifies the argmax column
    MetricsSummary metrics;                 // zeros when truth is empty
};

// Fits the threshold on the training scores, labels the test scores, and
// computes detection metrics when truth labels are present. `argmax_sensor`
// and `truth` may be empty; any non-empty ones must match test_scores.
AnomalyReport make_anomaly_report(std::string model, std::vector<std::size_t> train_times,
                                  std::vector<double> train_scores,
                                  std::vector<std::size_t> test_times,
                                  std::vector<double> test_scores,
                                  std::vector<std::size_t> argmax_sensor, std::vector<int> truth,
                                  double anomaly_rate);

// Serializes a report into `dir` (created if needed):
//   scores.csv        timestep,score,argmax_sensor,predicted,truth
//   train_scores.csv  timestep,score
//   metrics.json      model, threshold, and the metrics summary
//   scores.svg        score-over-time plot, threshold line, truth shading
void write_anomaly_report(const AnomalyReport& report, const std::string& dir);

}  // namespace glue
