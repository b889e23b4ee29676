#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glue/baselines.hpp"
#include "glue/dataset.hpp"
#include "glue/model.hpp"
#include "glue/train.hpp"

namespace glue {

// ---- Flat INI-style key-value files ----------------------------------------

// `[section]` headers followed by `key = value` lines; '#' or ';' start
// full-line comments. Duplicate keys in a section are errors, as are keys
// before any section header.
struct IniFile {
    struct Entry {
        std::string key;
        std::string value;
        long line = 0;  // 1-based, for error messages
    };
    struct Section {
        std::string name;
        std::vector<Entry> entries;
    };
    std::vector<Section> sections;

    const Entry* find(const std::string& section, const std::string& key) const;
};

IniFile parse_ini(const std::string& text, const std::string& path_for_errors);

// Applies GLUE_<SECTION>_<KEY>=value environment overrides (uppercased; the
// first underscore-delimited token is the section) on top of the parsed file.
// Only variables naming one of `sections` are applied, so unrelated GLUE_*
// variables cannot corrupt a file with a different schema. A matching section
// with an unknown key still fails the later schema check, as it should.
void apply_env_overrides(IniFile& ini, const std::vector<std::string>& sections);

// ---- Dataset manifest --------------------------------------------------------

// Declares where a dataset lives and how to preprocess it.
struct DatasetManifest {
    DatasetKind kind = DatasetKind::generic;
    std::string train_csv;
    std::string test_csv;
    std::size_t window = 5;
    double anomaly_rate = 0.0;         // expected rate for fit_threshold; 0 = unset
    std::size_t downsample_block = 10; // wadi only
    std::string candidates;            // optional edge-restriction file
};

DatasetManifest manifest_from_ini(const IniFile& ini, const std::string& path_for_errors);
DatasetManifest load_manifest(const std::string& path);

// ---- Full run configuration --------------------------------------------------

// Everything a command needs; persisting and reloading a RunConfig re-executes
// identically. Defaults match the documented model and training defaults.
struct RunConfig {
    std::string manifest_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    // Expected anomaly rate used to fit the detection threshold. 0 defers to
    // the manifest's rate, then to the training split's label rate.
    double detect_rate = 0.0;

    // model
    std::size_t embed_dim = 64;
    std::size_t top_k = 15;
    HeadMode head_mode = HeadMode::gaussian;
    double leaky_slope = 0.2;
    double sigma_floor = 1e-6;
    bool per_node_attention = false;
    std::size_t head_hidden = 1;

    // training
    std::size_t epochs = 25;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    std::size_t batch_size = 128;
    AdjacencyRefresh refresh = AdjacencyRefresh::per_epoch;
    bool shuffle = true;
    double grad_clip = 5.0;

    // baselines (for compare)
    std::vector<BaselineKind> baselines = {BaselineKind::pca, BaselineKind::knn,
                                           BaselineKind::ae, BaselineKind::var};
    std::size_t pca_components = 0;
    std::size_t knn_k = 5;
    std::size_t ae_bottleneck = 0;
    std::size_t ae_hidden = 0;
    std::size_t ae_epochs = 50;
    std::size_t ae_batch = 32;
    double ae_lr = 1e-3;

    ModelHyper hyper(std::size_t n_sensors, std::size_t window) const;
    TrainConfig train_config() const;
    AeConfig ae_config() const;
};

RunConfig run_config_from_ini(const IniFile& ini, const std::string& path_for_errors);
// Parses the file and applies environment overrides.
RunConfig load_run_config(const std::string& path);

// Canonical INI text for the configuration: parsing it back reproduces the
// RunConfig exactly, and its FNV-1a hash fingerprints runs in reports.
std::string serialize(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace glue
