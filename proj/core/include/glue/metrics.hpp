#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

// Pointwise (per-timestep) detection metrics plus, for forecasting models,
// the forecast error means. No point-adjustment is applied anywhere: adjusted
// protocols inflate scores, so every number here is strictly pointwise.
struct MetricsSummary {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> mse;  // forecasters only
    std::optional<double> mae;

    std::size_t total() const { return tp + fp + fn + tn; }
};

// Confusion counts and precision/recall/F1 with the zero conventions:
// P = 0 when nothing is predicted positive, R = 0 when no true positives
// exist, F1 = 2PR/(P+R) or 0 when P+R = 0. Nonzero entries count as
// positive. Throws ShapeError on length mismatch.
MetricsSummary prf1(std::span<const int> predicted, std::span<const int> truth);

// Means over all entries of squared and absolute forecast errors.
struct ForecastMetrics {
    double mse = 0.0;
    double mae = 0.0;
};
ForecastMetrics forecast_metrics(const Matrix& pred, const Matrix& truth);

// One consolidated experiment row: a model, its metrics, and the hash of the
// configuration that produced them (so tables can be regenerated).
struct ReportRow {
    std::string model;
    MetricsSummary metrics;
    std::string config_hash;
};

// Aligned fixed-width text table over all rows; one row per model.
std::string render_report_table(std::span<const ReportRow> rows);

// Machine-readable JSON summary plus the aligned text table.
// Throws ConfigError when `rows` is empty.
void write_report(std::span<const ReportRow> rows, const std::string& json_path,
                  const std::string& table_path);

}  // namespace glue
