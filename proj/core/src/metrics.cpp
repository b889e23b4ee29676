#include "glue/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "glue/error.hpp"
#include "glue/util.hpp"
#include "json.hpp"

namespace glue {

MetricsSummary prf1(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw ShapeError("prf1: predicted has " + std::to_string(predicted.size()) +
                         " labels but truth has " + std::to_string(truth.size()));
    MetricsSummary m;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t) ++m.tp;
        else if (p && !t) ++m.fp;
        else if (!p && t) ++m.fn;
        else ++m.tn;
    }
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

ForecastMetrics forecast_metrics(const Matrix& pred, const Matrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw ShapeError("forecast_metrics: shapes (" + std::to_string(pred.rows()) + " x " +
                         std::to_string(pred.cols()) + ") vs (" + std::to_string(truth.rows()) +
                         " x " + std::to_string(truth.cols()) + ") differ");
    ForecastMetrics fm;
    if (pred.size() == 0) return fm;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = truth[i] - pred[i];
        fm.mse += e * e;
        fm.mae += std::abs(e);
    }
    fm.mse /= static_cast<double>(pred.size());
    fm.mae /= static_cast<double>(pred.size());
    return fm;
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string cell(std::optional<double> v) { return v ? fixed3(*v) : "-"; }

}  // namespace

std::string render_report_table(std::span<const ReportRow> rows) {
    if (rows.empty()) throw ConfigError("report: no model rows to render");
    const std::vector<std::string> header = {"model", "precision", "recall", "f1",
                                             "mse",   "mae",       "config"};
    std::vector<std::vector<std::string>> grid = {header};
    for (const auto& r : rows) {
        grid.push_back({r.model, fixed3(r.metrics.precision), fixed3(r.metrics.recall),
                        fixed3(r.metrics.f1), cell(r.metrics.mse), cell(r.metrics.mae),
                        r.config_hash});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

    std::string out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t c = 0; c < grid[i].size(); ++c) {
            out += grid[i][c];
            if (c + 1 < grid[i].size())
                out += std::string(width[c] - grid[i][c].size() + 2, ' ');
        }
        out += '\n';
        if (i == 0) {
            std::size_t rule = 0;
            for (std::size_t c = 0; c < width.size(); ++c)
                rule += width[c] + (c + 1 < width.size() ? 2 : 0);
            out += std::string(rule, '-') + '\n';
        }
    }
    return out;
}

void write_report(std::span<const ReportRow> rows, const std::string& json_path,
                  const std::string& table_path) {
    if (rows.empty()) throw ConfigError("report: no model rows to write");
    nlohmann::ordered_json doc;
    doc["format"] = "glue-report";
    doc["version"] = 1;
    nlohmann::ordered_json models = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["model"] = r.model;
        row["precision"] = r.metrics.precision;
        row["recall"] = r.metrics.recall;
        row["f1"] = r.metrics.f1;
        row["tp"] = r.metrics.tp;
        row["fp"] = r.metrics.fp;
        row["fn"] = r.metrics.fn;
        row["tn"] = r.metrics.tn;
        if (r.metrics.mse) row["mse"] = *r.metrics.mse;
        if (r.metrics.mae) row["mae"] = *r.metrics.mae;
        row["config_hash"] = r.config_hash;
        models.push_back(std::move(row));
    }
    doc["models"] = std::move(models);
    write_text_file(json_path, doc.dump(2) + "\n");
    write_text_file(table_path, render_report_table(rows));
}

}  // namespace glue
