#include "glue/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "glue/error.hpp"
#include "glue/svg.hpp"
#include "glue/util.hpp"
#include "json.hpp"

namespace glue {

RobustStats robust_stats(const Matrix& train_abs_errors, double iqr_floor) {
    if (train_abs_errors.size() == 0)
        throw ShapeError("robust_stats: no training errors to fit on");
    if (train_abs_errors.rows() < 4)
        throw ShapeError("robust_stats: need at least 4 rows for quartiles, got " +
                         std::to_string(train_abs_errors.rows()));
    if (!(iqr_floor > 0.0)) throw ConfigError("robust_stats: iqr_floor must be > 0");

    const std::size_t t_len = train_abs_errors.rows();
    const std::size_t n = train_abs_errors.cols();
    RobustStats stats;
    stats.median.resize(n);
    stats.iqr.resize(n);
    std::vector<double> column(t_len);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t t = 0; t < t_len; ++t) column[t] = train_abs_errors(t, j);
        std::sort(column.begin(), column.end());
        stats.median[j] = quantile_sorted(column, 0.5);
        stats.iqr[j] = std::max(quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25),
                                iqr_floor);
    }
    return stats;
}

Matrix absolute_errors(const Matrix& forecast, const Matrix& truth) {
    if (forecast.rows() != truth.rows() || forecast.cols() != truth.cols())
        throw ShapeError("absolute_errors: forecast (" + std::to_string(forecast.rows()) + " x " +
                         std::to_string(forecast.cols()) + ") vs truth (" +
                         std::to_string(truth.rows()) + " x " + std::to_string(truth.cols()) +
                         ")");
    Matrix err(forecast.rows(), forecast.cols());
    for (std::size_t i = 0; i < err.size(); ++i) err[i] = std::abs(truth[i] - forecast[i]);
    return err;
}

MreScore mre(std::span<const double> abs_errors, const RobustStats& stats) {
    if (abs_errors.size() != stats.n_sensors())
        throw ShapeError("mre: got " + std::to_string(abs_errors.size()) + " errors for " +
                         std::to_string(stats.n_sensors()) + " fitted sensors");
    if (abs_errors.empty()) throw ShapeError("mre: empty error vector");
    MreScore best{(abs_errors[0] - stats.median[0]) / stats.iqr[0], 0};
    for (std::size_t i = 1; i < abs_errors.size(); ++i) {
        const double robust = (abs_errors[i] - stats.median[i]) / stats.iqr[i];
        if (robust > best.value) best = {robust, i};
    }
    return best;
}

ScoreSeries mre_series(const Matrix& abs_errors, const RobustStats& stats) {
    ScoreSeries out;
    out.value.reserve(abs_errors.rows());
    out.argmax.reserve(abs_errors.rows());
    for (std::size_t t = 0; t < abs_errors.rows(); ++t) {
        const MreScore s = mre(abs_errors.row_span(t), stats);
        out.value.push_back(s.value);
        out.argmax.push_back(s.argmax);
    }
    return out;
}

double fit_threshold(std::span<const double> train_scores, double rate) {
    if (train_scores.empty()) throw ShapeError("fit_threshold: no training scores");
    if (!(rate > 0.0 && rate < 1.0))
        throw ConfigError("fit_threshold: anomaly rate must lie in (0, 1), got " +
                          format_double(rate));
    return quantile(train_scores, 1.0 - rate);
}

std::vector<int> detect(std::span<const double> scores, double threshold) {
    if (!std::isfinite(threshold)) throw NumericError("detect: threshold is not finite");
    std::vector<int> labels(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > threshold ? 1 : 0;
    return labels;
}

AnomalyReport make_anomaly_report(std::string model, std::vector<std::size_t> train_times,
                                  std::vector<double> train_scores,
                                  std::vector<std::size_t> test_times,
                                  std::vector<double> test_scores,
                                  std::vector<std::size_t> argmax_sensor, std::vector<int> truth,
                                  double anomaly_rate) {
    if (train_times.size() != train_scores.size())
        throw ShapeError("report: train times and scores differ in length");
    if (test_times.size() != test_scores.size())
        throw ShapeError("report: test times and scores differ in length");
    if (!argmax_sensor.empty() && argmax_sensor.size() != test_scores.size())
        throw ShapeError("report: argmax column does not match the test scores");
    if (!truth.empty() && truth.size() != test_scores.size())
        throw ShapeError("report: truth labels do not match the test scores");

    AnomalyReport rep;
    rep.model = std::move(model);
    rep.anomaly_rate = anomaly_rate;
    rep.threshold = fit_threshold(train_scores, anomaly_rate);
    rep.train_times = std::move(train_times);
    rep.train_scores = std::move(train_scores);
    rep.test_times = std::move(test_times);
    rep.test_scores = std::move(test_scores);
    rep.argmax_sensor = std::move(argmax_sensor);
    rep.truth = std::move(truth);
    rep.predicted = detect(rep.test_scores, rep.threshold);
    if (!rep.truth.empty()) rep.metrics = prf1(rep.predicted, rep.truth);
    return rep;
}

namespace {

std::string argmax_cell(const AnomalyReport& rep, std::size_t i) {
    if (rep.argmax_sensor.empty()) return "";
    const std::size_t s = rep.argmax_sensor[i];
    if (s < rep.sensor_names.size()) return rep.sensor_names[s];
    return std::to_string(s);
}

void add_truth_shading(SvgPlot& plot, const AnomalyReport& rep) {
    std::size_t run_start = 0;
    bool in_run = false;
    for (std::size_t i = 0; i <= rep.truth.size(); ++i) {
        const bool anomalous = i < rep.truth.size() && rep.truth[i] != 0;
        if (anomalous && !in_run) {
            run_start = i;
            in_run = true;
        } else if (!anomalous && in_run) {
            plot.add_vspan(static_cast<double>(rep.test_times[run_start]),
                           static_cast<double>(rep.test_times[i - 1]), "#d62728");
            in_run = false;
        }
    }
}

}  // namespace

void write_anomaly_report(const AnomalyReport& report, const std::string& dir) {
    if (report.test_scores.empty()) throw ShapeError("report: nothing to write, no test scores");
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };

    std::string scores = "timestep,score,argmax_sensor,predicted,truth\n";
    for (std::size_t i = 0; i < report.test_scores.size(); ++i) {
        scores += std::to_string(report.test_times[i]) + ',' +
                  format_double(report.test_scores[i]) + ',' + argmax_cell(report, i) + ',' +
                  std::to_string(report.predicted[i]) + ',' +
                  (report.truth.empty() ? std::string() : std::to_string(report.truth[i])) + '\n';
    }
    write_text_file(path("scores.csv"), scores);

    std::string train_csv = "timestep,score\n";
    for (std::size_t i = 0; i < report.train_scores.size(); ++i)
        train_csv += std::to_string(report.train_times[i]) + ',' +
                     format_double(report.train_scores[i]) + '\n';
    write_text_file(path("train_scores.csv"), train_csv);

    nlohmann::ordered_json meta;
    meta["format"] = "glue-anomaly-report";
    meta["version"] = 1;
    meta["model"] = report.model;
    meta["threshold"] = report.threshold;
    meta["anomaly_rate"] = report.anomaly_rate;
    meta["train_points"] = report.train_scores.size();
    meta["test_points"] = report.test_scores.size();
    meta["flagged"] = static_cast<std::size_t>(
        std::count(report.predicted.begin(), report.predicted.end(), 1));
    meta["labeled"] = !report.truth.empty();
    if (!report.truth.empty()) {
        meta["precision"] = report.metrics.precision;
        meta["recall"] = report.metrics.recall;
        meta["f1"] = report.metrics.f1;
        meta["tp"] = report.metrics.tp;
        meta["fp"] = report.metrics.fp;
        meta["fn"] = report.metrics.fn;
        meta["tn"] = report.metrics.tn;
    }
    write_text_file(path("metrics.json"), meta.dump(2) + "\n");

    SvgPlot plot("Anomaly score over time (" + report.model + ")", "timestep", "score");
    add_truth_shading(plot, report);
    std::vector<double> xs(report.test_times.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(report.test_times[i]);
    plot.add_line(xs, report.test_scores, "#1f77b4", "score");
    plot.add_hline(report.threshold, "#d62728", "threshold");
    plot.save(path("scores.svg"));
}

}  // namespace glue
