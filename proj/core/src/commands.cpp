#include "glue/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "glue/baselines.hpp"
#include "glue/checkpoint.hpp"
#include "glue/csv.hpp"
#include "glue/error.hpp"
#include "glue/metrics.hpp"
#include "glue/preprocess.hpp"
#include "glue/scoring.hpp"
#include "glue/svg.hpp"
#include "glue/train.hpp"
#include "glue/util.hpp"

namespace glue {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& leaf) {
    return (fs::path(dir) / leaf).string();
}

// Paths inside a manifest are relative to the manifest's own directory.
std::string resolve_near(const std::string& anchor_file, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(anchor_file).parent_path() / p).string();
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Column convention for manifest CSVs: a column named timestamp/time is the
// time axis, label the anomaly flag, trajectory the segment id (all
// case-insensitive); everything else is a sensor.
CsvSchema sniff_schema(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw IoError("preprocess: cannot open '" + csv_path + "'");
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    CsvSchema schema;
    std::istringstream line(header);
    std::string cell;
    while (std::getline(line, cell, ',')) {
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
            cell = cell.substr(1, cell.size() - 2);
        }
        std::string name = lower(cell);
        if (name == "timestamp" || name == "time") {
            schema.time_column = cell;
        } else if (name == "label") {
            schema.label_column = cell;
        } else if (name == "trajectory") {
            schema.trajectory_column = cell;
        }
    }
    return schema;
}

DatasetManifest manifest_for(const RunConfig& cfg, const char* cmd) {
    if (cfg.manifest_path.empty()) {
        throw ConfigError(std::string(cmd) +
                          ": no dataset manifest configured (set [run] manifest)");
    }
    return load_manifest(cfg.manifest_path);
}

DatasetBundle bundle_for(const OutputLayout& out, const char* cmd) {
    if (!fs::exists(join(out.dataset_dir, "dataset.json"))) {
        throw ConfigError(std::string(cmd) + ": no preprocessed dataset under '" +
                          out.dataset_dir + "'; run preprocess first");
    }
    return load_bundle(out.dataset_dir);
}

Checkpoint checkpoint_for(const OutputLayout& out, const char* cmd) {
    if (!fs::exists(out.checkpoint)) {
        throw ConfigError(std::string(cmd) + ": no checkpoint at '" + out.checkpoint +
                          "'; run train first");
    }
    return load_checkpoint(out.checkpoint);
}

std::string list_names(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out.empty() ? "(none)" : out;
}

void check_sensors_match(const std::vector<std::string>& checkpoint_names,
                         const std::vector<std::string>& dataset_names) {
    if (checkpoint_names == dataset_names) return;
    std::vector<std::string> only_ckp;
    std::vector<std::string> only_data;
    for (const auto& n : checkpoint_names) {
        if (std::find(dataset_names.begin(), dataset_names.end(), n) == dataset_names.end()) {
            only_ckp.push_back(n);
        }
    }
    for (const auto& n : dataset_names) {
        if (std::find(checkpoint_names.begin(), checkpoint_names.end(), n) ==
            checkpoint_names.end()) {
            only_data.push_back(n);
        }
    }
    std::string detail = only_ckp.empty() && only_data.empty()
                             ? "same sensors, different order"
                             : "checkpoint-only: " + list_names(only_ckp) +
                                   "; dataset-only: " + list_names(only_data);
    throw ConfigError("detect: checkpoint sensors do not match the dataset (" + detail + ")");
}

// Forecasts for every window of a set, chunked to bound peak memory.
struct ForecastRun {
    Matrix mu;       // B x N
    Matrix sigma2;   // B x N, empty in point mode
    Matrix targets;  // B x N
    std::vector<std::size_t> times;
    std::vector<int> labels;  // empty when the split is unlabeled
};

ForecastRun run_forecasts(const GlueParams& params, const Adjacency& adj,
                          const WindowSet& windows, unsigned threads) {
    const std::size_t total = windows.size();
    const std::size_t n = windows.n_sensors();
    const bool gaussian = params.head_mode == HeadMode::gaussian;
    ForecastRun run;
    run.mu = Matrix(total, n);
    if (gaussian) run.sigma2 = Matrix(total, n);
    run.targets = Matrix(total, n);
    run.times.reserve(total);

    constexpr std::size_t kChunk = 512;
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t begin = 0; begin < total; begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, total);
        WindowBatch batch = windows.gather(
            std::span<const std::size_t>(order).subspan(begin, end - begin));
        ForecastDistribution fd = forward(params, adj, batch, threads);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            for (std::size_t j = 0; j < n; ++j) {
                run.mu(begin + b, j) = fd.mu(b, j);
                if (gaussian) run.sigma2(begin + b, j) = fd.sigma2(b, j);
                run.targets(begin + b, j) = batch.targets(b, j);
            }
        }
        run.times.insert(run.times.end(), batch.target_times.begin(),
                         batch.target_times.end());
        run.labels.insert(run.labels.end(), batch.target_labels.begin(),
                          batch.target_labels.end());
    }
    return run;
}

// Shared scoring path for every forecasting model: absolute errors ->
// robust stats on the training split -> Max Robust Error series -> report.
AnomalyReport forecaster_report(std::string model, const ForecastRun& train,
                                const ForecastRun& test, double anomaly_rate,
                                const std::vector<std::string>& sensor_names) {
    Matrix train_err = absolute_errors(train.mu, train.targets);
    Matrix test_err = absolute_errors(test.mu, test.targets);
    RobustStats stats = robust_stats(train_err);
    ScoreSeries train_scores = mre_series(train_err, stats);
    ScoreSeries test_scores = mre_series(test_err, stats);
    AnomalyReport report = make_anomaly_report(
        std::move(model), train.times, std::move(train_scores.value), test.times,
        std::move(test_scores.value), std::move(test_scores.argmax), test.labels,
        anomaly_rate);
    report.sensor_names = sensor_names;
    ForecastMetrics fm = forecast_metrics(test.mu, test.targets);
    report.metrics.mse = fm.mse;
    report.metrics.mae = fm.mae;
    return report;
}

std::string safe_filename(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    }
    return out.empty() ? std::string("sensor") : out;
}

// Per-sensor forecast bands (gaussian head only): actual reading, forecast
// mean and a 95% band, with the CSV data next to each SVG.
void write_band_plots(const ForecastRun& test, const std::vector<std::string>& names,
                      const std::string& dir) {
    fs::create_directories(dir);
    std::vector<double> x(test.times.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(test.times[i]);
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::vector<double> actual(x.size()), mu(x.size()), lo(x.size()), hi(x.size());
        std::ostringstream csv;
        csv << "timestep,actual,mu,sigma2\n";
        for (std::size_t i = 0; i < x.size(); ++i) {
            actual[i] = test.targets(i, j);
            mu[i] = test.mu(i, j);
            double half = 1.96 * std::sqrt(test.sigma2(i, j));
            lo[i] = mu[i] - half;
            hi[i] = mu[i] + half;
            csv << test.times[i] << "," << format_double(actual[i]) << ","
                << format_double(mu[i]) << "," << format_double(test.sigma2(i, j)) << "\n";
        }
        SvgPlot plot(names[j] + " forecast", "timestep", "standardized reading");
        plot.add_band(x, lo, hi, "#1f77b4", 0.2);
        plot.add_line(x, actual, "#2ca02c", "actual");
        plot.add_line(x, mu, "#1f77b4", "forecast mean");
        const std::string stem = join(dir, safe_filename(names[j]));
        plot.save(stem + ".svg");
        write_text_file(stem + ".csv", csv.str());
    }
}

ModelHyper hyper_for(const RunConfig& cfg, const DatasetBundle& bundle,
                     const DatasetManifest& manifest) {
    ModelHyper h = cfg.hyper(bundle.train.n_sensors(), manifest.window);
    h.validate();
    return h;
}

// Expected anomaly rate for fit_threshold: the run config wins, then the
// manifest, then the training split's own label rate.
double threshold_rate(const RunConfig& cfg, const DatasetManifest& manifest,
                      const DatasetBundle& bundle, const char* cmd) {
    if (cfg.detect_rate > 0.0) return cfg.detect_rate;
    if (manifest.anomaly_rate > 0.0) return manifest.anomaly_rate;
    if (bundle.train.has_labels()) {
        std::size_t positive = 0;
        for (int label : bundle.train.labels) positive += label != 0 ? 1 : 0;
        double rate = static_cast<double>(positive) /
                      static_cast<double>(bundle.train.labels.size());
        if (rate > 0.0 && rate < 1.0) return rate;
    }
    throw ConfigError(std::string(cmd) +
                      ": no anomaly rate available; set [run] detect_rate or the "
                      "manifest's anomaly_rate (the training split has no labeled "
                      "anomalies to infer it from)");
}

}  // namespace

OutputLayout layout_for(const std::string& out_dir) {
    OutputLayout out;
    out.dataset_dir = join(out_dir, "dataset");
    out.checkpoint = join(out_dir, "model.ckpt");
    out.loss_csv = join(out_dir, "loss.csv");
    out.loss_svg = join(out_dir, "loss.svg");
    out.report_dir = join(out_dir, "report");
    out.evaluation_dir = join(out_dir, "evaluation");
    out.compare_dir = join(out_dir, "compare");
    out.export_dir = join(out_dir, "export");
    return out;
}

void cmd_preprocess(const RunConfig& cfg) {
    OutputLayout out = layout_for(cfg.out_dir);
    DatasetManifest manifest = manifest_for(cfg, "preprocess");
    const std::string train_path = resolve_near(cfg.manifest_path, manifest.train_csv);
    const std::string test_path = resolve_near(cfg.manifest_path, manifest.test_csv);
    RawTable train = load_csv(train_path, sniff_schema(train_path));
    RawTable test = load_csv(test_path, sniff_schema(test_path));
    PreprocessOptions opt;
    opt.kind = manifest.kind;
    opt.downsample_block = manifest.downsample_block;
    DatasetBundle bundle = preprocess(std::move(train), std::move(test), opt);
    save_bundle(bundle, out.dataset_dir);
    std::cout << "preprocess: " << bundle.train.n_times() << " train rows, "
              << bundle.test.n_times() << " test rows, " << bundle.train.n_sensors()
              << " sensors";
    if (!bundle.train.dropped_sensors.empty()) {
        std::cout << " (dropped " << bundle.train.dropped_sensors.size()
                  << " constant: " << list_names(bundle.train.dropped_sensors) << ")";
    }
    std::cout << "\nwrote " << out.dataset_dir << "\n";
}

void cmd_train(const RunConfig& cfg) {
    OutputLayout out = layout_for(cfg.out_dir);
    DatasetManifest manifest = manifest_for(cfg, "train");
    DatasetBundle bundle = bundle_for(out, "train");
    ModelHyper hyper = hyper_for(cfg, bundle, manifest);
    TrainConfig tcfg = cfg.train_config();

    Candidates candidates;
    const Candidates* candidates_ptr = nullptr;
    if (!manifest.candidates.empty()) {
        candidates = load_candidates(resolve_near(cfg.manifest_path, manifest.candidates),
                                     bundle.train.sensor_names);
        candidates_ptr = &candidates;
    }

    TrainedModel model = train(bundle.train, hyper, tcfg, candidates_ptr);

    Checkpoint ckp;
    ckp.seed = cfg.seed;
    ckp.params = std::move(model.params);
    ckp.adjacency = std::move(model.adjacency);
    ckp.sensor_names = bundle.train.sensor_names;
    ckp.norm_stats = bundle.train.norm_stats;
    fs::create_directories(cfg.out_dir);
    save_checkpoint(ckp, out.checkpoint);
    model.report.checkpoint_path = out.checkpoint;

    write_loss_history(model.report, out.loss_csv);
    std::vector<double> epochs(model.report.epoch_loss.size());
    std::iota(epochs.begin(), epochs.end(), 1.0);
    SvgPlot plot("training loss", "epoch", "mean window loss");
    plot.add_line(epochs, model.report.epoch_loss, "#1f77b4", "loss");
    plot.save(out.loss_svg);

    std::cout << "train: " << model.report.epoch_loss.size() << " epochs, final loss "
              << format_double(model.report.epoch_loss.back()) << "\n"
              << "wrote " << out.checkpoint << "\n"
              << "wrote " << out.loss_csv << "\n"
              << "wrote " << out.loss_svg << "\n";
}

void cmd_detect(const RunConfig& cfg) {
    OutputLayout out = layout_for(cfg.out_dir);
    DatasetManifest manifest = manifest_for(cfg, "detect");
    DatasetBundle bundle = bundle_for(out, "detect");
    Checkpoint ckp = checkpoint_for(out, "detect");
    check_sensors_match(ckp.sensor_names, bundle.test.sensor_names);
    if (bundle.test.n_times() == 0) {
        throw ConfigError("detect: the test split is empty");
    }

    const std::size_t w = ckp.params.hyper.window;
    WindowSet train_windows = make_windows(bundle.train, w);
    WindowSet test_windows = make_windows(bundle.test, w);
    ForecastRun train_run = run_forecasts(ckp.params, ckp.adjacency, train_windows,
                                          cfg.threads);
    ForecastRun test_run = run_forecasts(ckp.params, ckp.adjacency, test_windows,
                                         cfg.threads);

    const std::string model_name =
        ckp.params.head_mode == HeadMode::gaussian ? "glue" : "gdn";
    const double rate = threshold_rate(cfg, manifest, bundle, "detect");
    AnomalyReport report = forecaster_report(model_name, train_run, test_run, rate,
                                             ckp.sensor_names);
    write_anomaly_report(report, out.report_dir);
    if (ckp.params.head_mode == HeadMode::gaussian) {
        write_band_plots(test_run, ckp.sensor_names, join(out.report_dir, "bands"));
    }

    std::size_t flagged = 0;
    for (int p : report.predicted) flagged += p != 0 ? 1 : 0;
    std::cout << "detect: model " << model_name << ", threshold "
              << format_double(report.threshold) << ", flagged " << flagged << " of "
              << report.predicted.size() << " timesteps\n";
    if (!report.truth.empty()) {
        std::cout << "detect: precision " << format_double(report.metrics.precision)
                  << ", recall " << format_double(report.metrics.recall) << ", F1 "
                  << format_double(report.metrics.f1) << "\n";
    }
    std::cout << "wrote " << out.report_dir << "\n";
}

void cmd_evaluate(const RunConfig& cfg) {
    OutputLayout out = layout_for(cfg.out_dir);
    const std::string scores_path = join(out.report_dir, "scores.csv");
    if (!fs::exists(scores_path)) {
        throw ConfigError("evaluate: no detection report at '" + scores_path +
                          "'; run detect first");
    }

    // scores.csv: timestep,score,argmax_sensor,predicted,truth
    std::ifstream in(scores_path, std::ios::binary);
    if (!in) throw IoError("evaluate: cannot open '" + scores_path + "'");
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> predicted;
    std::vector<int> truth;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream cells_in(line);
        std::string cell;
        while (std::getline(cells_in, cell, ',')) cells.push_back(cell);
        while (cells.size() < 5) cells.emplace_back();
        if (cells[4].empty()) {
            throw ConfigError("evaluate: '" + scores_path +
                              "' has no truth labels; nothing to evaluate");
        }
        predicted.push_back(cells[3] == "1" ? 1 : 0);
        truth.push_back(cells[4] == "1" ? 1 : 0);
    }
    if (predicted.empty()) {
        throw ConfigError("evaluate: '" + scores_path + "' contains no score rows");
    }

    std::string model = "model";
    const std::string metrics_path = join(out.report_dir, "metrics.json");
    if (fs::exists(metrics_path)) {
        const std::string text = read_text_file(metrics_path);
        // minimal extraction: "model": "<name>"
        const std::string key = "\"model\": \"";
        std::size_t at = text.find(key);
        if (at != std::string::npos) {
            std::size_t begin = at + key.size();
            std::size_t end = text.find('"', begin);
            if (end != std::string::npos) model = text.substr(begin, end - begin);
        }
    }

    ReportRow row;
    row.model = model;
    row.metrics = prf1(predicted, truth);
    row.config_hash = config_hash(cfg);
    const std::vector<ReportRow> rows = {row};
    fs::create_directories(out.evaluation_dir);
    write_report(rows, join(out.evaluation_dir, "report.json"),
                 join(out.evaluation_dir, "report.txt"));
    std::cout << render_report_table(rows);
    std::cout << "wrote " << out.evaluation_dir << "\n";
}

void cmd_compare(const RunConfig& cfg) {
    OutputLayout out = layout_for(cfg.out_dir);
    DatasetManifest manifest = manifest_for(cfg, "compare");
    DatasetBundle bundle = bundle_for(out, "compare");
    if (bundle.test.n_times() == 0) {
        throw ConfigError("compare: the test split is empty");
    }
    const double rate = threshold_rate(cfg, manifest, bundle, "compare");
    const std::string hash = config_hash(cfg);

    WindowSet train_windows = make_windows(bundle.train, manifest.window);
    WindowSet test_windows = make_windows(bundle.test, manifest.window);
    WindowBatch train_batch = train_windows.all();
    WindowBatch test_batch = test_windows.all();

    std::vector<ReportRow> rows;
    auto finish = [&](AnomalyReport report) {
        write_anomaly_report(report, join(out.compare_dir, report.model));
        ReportRow row{report.model, report.metrics, hash};
        rows.push_back(std::move(row));
        std::cout << "compare: finished " << report.model << "\n";
    };

    // Graph forecasters: the gaussian head (glue) and the point head (gdn).
    for (HeadMode mode : {HeadMode::gaussian, HeadMode::point}) {
        RunConfig variant = cfg;
        variant.head_mode = mode;
        ModelHyper hyper = hyper_for(variant, bundle, manifest);
        TrainedModel model = train(bundle.train, hyper, variant.train_config());
        ForecastRun train_run = run_forecasts(model.params, model.adjacency,
                                              train_windows, cfg.threads);
        ForecastRun test_run = run_forecasts(model.params, model.adjacency,
                                             test_windows, cfg.threads);
        finish(forecaster_report(mode == HeadMode::gaussian ? "glue" : "gdn", train_run,
                                 test_run, rate, bundle.train.sensor_names));
    }

    std::vector<BaselineKind> selected;
    for (BaselineKind kind : cfg.baselines) {
        if (std::find(selected.begin(), selected.end(), kind) == selected.end()) {
            selected.push_back(kind);
        }
    }

    Matrix train_rows_m;  // reconstruction inputs, built on first use
    Matrix test_rows_m;
    auto reconstruction_inputs = [&]() {
        if (train_rows_m.empty()) {
            train_rows_m = reconstruction_rows(train_batch);
            test_rows_m = reconstruction_rows(test_batch);
        }
    };
    auto window_report = [&](std::string model, std::vector<double> train_scores,
                             std::vector<double> test_scores) {
        AnomalyReport report = make_anomaly_report(
            std::move(model), train_batch.target_times, std::move(train_scores),
            test_batch.target_times, std::move(test_scores), {},
            test_batch.target_labels, rate);
        report.sensor_names = bundle.train.sensor_names;
        return report;
    };

    for (BaselineKind kind : selected) {
        switch (kind) {
            case BaselineKind::pca: {
                reconstruction_inputs();
                PcaModel model = pca_fit(train_rows_m, cfg.pca_components);
                finish(window_report("pca", pca_scores(model, train_rows_m),
                                     pca_scores(model, test_rows_m)));
                break;
            }
            case BaselineKind::knn: {
                reconstruction_inputs();
                // Training rows are scored against their own matrix; the extra
                // neighbor swallows the zero self-distance so train and test
                // scores stay comparable.
                finish(window_report(
                    "knn", knn_scores(train_rows_m, train_rows_m, cfg.knn_k + 1),
                    knn_scores(train_rows_m, test_rows_m, cfg.knn_k)));
                break;
            }
            case BaselineKind::ae: {
                reconstruction_inputs();
                AeModel model = ae_fit(train_rows_m, cfg.ae_config());
                finish(window_report("ae", ae_scores(model, train_rows_m),
                                     ae_scores(model, test_rows_m)));
                break;
            }
            case BaselineKind::var: {
                VarModel model = var_fit(train_batch);
                ForecastRun train_run{var_forecast_batch(model, train_batch), Matrix(),
                                      train_batch.targets, train_batch.target_times,
                                      train_batch.target_labels};
                ForecastRun test_run{var_forecast_batch(model, test_batch), Matrix(),
                                     test_batch.targets, test_batch.target_times,
                                     test_batch.target_labels};
                finish(forecaster_report("var", train_run, test_run, rate,
                                         bundle.train.sensor_names));
                break;
            }
        }
    }

    write_report(rows, join(out.compare_dir, "report.json"),
                 join(out.compare_dir, "report.txt"));
    std::cout << render_report_table(rows);
    std::cout << "wrote " << out.compare_dir << "\n";
}

void cmd_export(const RunConfig& cfg) {
    OutputLayout out = layout_for(cfg.out_dir);
    Checkpoint ckp = checkpoint_for(out, "export");
    fs::create_directories(out.export_dir);
    const std::string embeddings_path = join(out.export_dir, "embeddings.csv");
    const std::string projection_path = join(out.export_dir, "embedding_projection.csv");
    const std::string graph_path = join(out.export_dir, "graph.csv");
    export_embeddings(ckp.params.embeddings(), ckp.sensor_names, embeddings_path,
                      projection_path);
    export_graph(ckp.params.embeddings(), ckp.adjacency, ckp.sensor_names, graph_path);
    std::cout << "wrote " << embeddings_path << "\n"
              << "wrote " << projection_path << "\n"
              << "wrote " << graph_path << "\n";
}

}  // namespace glue
