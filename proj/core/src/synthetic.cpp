#include "glue/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "glue/error.hpp"
#include "glue/rng.hpp"
#include "glue/scoring.hpp"
#include "glue/util.hpp"

namespace glue {

namespace {

constexpr std::size_t kSensors = 5;

// One reading per sensor at absolute time t, given the two previous rows.
// prev1 is t-1, prev2 is t-2 (zero rows before the start of time).
void step_row(double* row, const double* prev1, const double* prev2, double t,
              double noise_std, Rng& rng) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    row[0] = std::sin(two_pi * t / 47.0) + noise_std * rng.gaussian();
    row[1] = 0.8 * prev1[0] + noise_std * rng.gaussian();
    row[2] = std::sin(two_pi * t / 31.0 + 1.3) + noise_std * rng.gaussian();
    row[3] = 0.5 * prev2[0] + 0.3 * prev1[1] + noise_std * rng.gaussian();
    row[4] = -0.9 * prev1[2] + noise_std * rng.gaussian();
}

std::string csv_text(const SyntheticSeries& s, const Matrix& values,
                     const std::vector<int>& labels) {
    std::ostringstream out;
    out << "timestamp";
    for (const auto& name : s.sensor_names) out << "," << name;
    out << ",label\n";
    for (std::size_t t = 0; t < values.rows(); ++t) {
        out << t;
        for (std::size_t j = 0; j < values.cols(); ++j) {
            out << "," << format_double(values(t, j));
        }
        out << "," << labels[t] << "\n";
    }
    return out.str();
}

}  // namespace

void SyntheticConfig::validate() const {
    if (segment_len < 1) throw ConfigError("synthetic: segment_len must be at least 1");
    if (train_rows < 64 || test_rows < 8 * segment_len) {
        throw ConfigError("synthetic: splits too short (need train_rows >= 64 and "
                          "test_rows >= 8 * segment_len)");
    }
    if (!(anomaly_rate > 0.0 && anomaly_rate < 0.5)) {
        throw ConfigError("synthetic: anomaly_rate must lie in (0, 0.5)");
    }
    if (shift_sigmas <= 0.0) throw ConfigError("synthetic: shift_sigmas must be positive");
    if (noise_std < 0.0) throw ConfigError("synthetic: noise_std must be non-negative");
}

SyntheticSeries make_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    SyntheticSeries s;
    s.sensor_names = {"s0", "s1", "s2", "s3", "s4"};
    s.planted_edges = {{0, 1}, {0, 3}, {1, 3}, {2, 4}};
    s.train = Matrix(cfg.train_rows, kSensors);
    s.test = Matrix(cfg.test_rows, kSensors);
    s.train_labels.assign(cfg.train_rows, 0);
    s.test_labels.assign(cfg.test_rows, 0);

    // One continuous trajectory; the test split carries on where the train
    // split stops so both share the same dynamics.
    const double zero_row[kSensors] = {};
    for (std::size_t t = 0; t < cfg.train_rows; ++t) {
        const double* p1 = t >= 1 ? &s.train(t - 1, 0) : zero_row;
        const double* p2 = t >= 2 ? &s.train(t - 2, 0) : zero_row;
        step_row(&s.train(t, 0), p1, p2, static_cast<double>(t), cfg.noise_std, rng);
    }
    for (std::size_t t = 0; t < cfg.test_rows; ++t) {
        const double* p1 = t >= 1 ? &s.test(t - 1, 0)
                                  : &s.train(cfg.train_rows - 1, 0);
        const double* p2 = t >= 2 ? &s.test(t - 2, 0)
                          : t == 1 ? &s.train(cfg.train_rows - 1, 0)
                                   : &s.train(cfg.train_rows - 2, 0);
        step_row(&s.test(t, 0), p1, p2, static_cast<double>(cfg.train_rows + t),
                 cfg.noise_std, rng);
    }

    // Robust per-sensor scale from the clean training split.
    RobustStats scale = robust_stats(s.train);

    // Non-overlapping level-shift segments; keep a small clean margin between
    // segments and away from the split start so every planted row is visible
    // to a window-based detector.
    const std::size_t n_segments = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(cfg.anomaly_rate * static_cast<double>(cfg.test_rows) /
                            static_cast<double>(cfg.segment_len))));
    const std::size_t margin = 4;
    const std::size_t min_start = 10;
    if (cfg.test_rows < min_start + cfg.segment_len) {
        throw ConfigError("synthetic: test split too short for one anomaly segment");
    }
    const std::size_t max_start = cfg.test_rows - cfg.segment_len;
    std::vector<std::size_t> starts;
    std::size_t attempts = 0;
    while (starts.size() < n_segments) {
        if (++attempts > 100000) {
            throw ConfigError("synthetic: cannot place anomaly segments; lower the "
                              "rate or shorten the segments");
        }
        std::size_t start = min_start + rng.below(max_start - min_start + 1);
        bool clash = false;
        for (std::size_t other : starts) {
            std::size_t lo = other > cfg.segment_len + margin
                                 ? other - cfg.segment_len - margin : 0;
            if (start >= lo && start <= other + cfg.segment_len + margin) {
                clash = true;
                break;
            }
        }
        if (!clash) starts.push_back(start);
    }
    std::sort(starts.begin(), starts.end());

    for (std::size_t start : starts) {
        std::size_t sensor = rng.below(kSensors);
        double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        double shift = sign * cfg.shift_sigmas * scale.iqr[sensor];
        for (std::size_t t = start; t < start + cfg.segment_len; ++t) {
            s.test(t, sensor) += shift;
            s.test_labels[t] = 1;
        }
    }
    return s;
}

void write_synthetic(const SyntheticSeries& series, const SyntheticConfig& cfg,
                     const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::filesystem::path base(dir);
    write_text_file((base / "train.csv").string(), csv_text(series, series.train,
                                                            series.train_labels));
    write_text_file((base / "test.csv").string(), csv_text(series, series.test,
                                                           series.test_labels));
    std::ostringstream manifest;
    manifest << "[dataset]\n"
             << "kind = generic\n"
             << "train = train.csv\n"
             << "test = test.csv\n"
             << "window = 5\n"
             << "anomaly_rate = " << format_double(cfg.anomaly_rate) << "\n";
    write_text_file((base / "manifest.ini").string(), manifest.str());
}

}  // namespace glue
