#pragma once

#include <string>

#include "glue/config.hpp"

namespace glue {

// Fixed artifact layout under the run's output directory. Commands compose
// through it: preprocess fills dataset/, train reads it and writes the
// checkpoint, detect reads both, and so on.
struct OutputLayout {
    std::string dataset_dir;     // train.bin, test.bin, dataset.json
    std::string checkpoint;      // model.ckpt
    std::string loss_csv;        // loss.csv (data behind loss.svg)
    std::string loss_svg;        // loss.svg
    std::string report_dir;      // scores.csv, metrics.json, scores.svg, bands/
    std::string evaluation_dir;  // report.json, report.txt
    std::string compare_dir;     // <model>/..., report.json, report.txt
    std::string export_dir;      // embeddings.csv, embedding_projection.csv, graph.csv
};

OutputLayout layout_for(const std::string& out_dir);

// Each command throws (ConfigError, IoError, ...) on failure; the CLI turns
// that into a nonzero exit with the message on stderr.

// Manifest CSVs -> preprocessed, persisted dataset bundle.
void cmd_preprocess(const RunConfig& cfg);

// Preprocessed bundle -> checkpoint + loss history (CSV and SVG).
void cmd_train(const RunConfig& cfg);

// Bundle + checkpoint -> anomaly report (scores, metrics, plots) and, with a
// gaussian head, per-sensor forecast band plots.
void cmd_detect(const RunConfig& cfg);

// Finished detect report -> consolidated single-model metrics table.
void cmd_evaluate(const RunConfig& cfg);

// Trains/fits the graph models plus the selected baselines on one dataset
// and writes per-model reports plus the consolidated comparison table.
void cmd_compare(const RunConfig& cfg);

// Checkpoint -> embeddings CSV, 2-D projection CSV, graph edge list.
void cmd_export(const RunConfig& cfg);

}  // namespace glue
