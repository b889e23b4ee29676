// CLI layer: configuration files, environment overrides, the synthetic
// generator, and the command pipeline end to end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "glue/checkpoint.hpp"
#include "glue/commands.hpp"
#include "glue/config.hpp"
#include "glue/error.hpp"
#include "glue/scoring.hpp"
#include "glue/synthetic.hpp"
#include "glue/util.hpp"
#include "test_support.hpp"

using namespace glue;
namespace fs = std::filesystem;

namespace {

// Restores (or clears) an environment variable on scope exit.
class EnvGuard {
  public:
    EnvGuard(const char* name, const char* value) : name_(name) {
        const char* old = std::getenv(name);
        if (old != nullptr) saved_ = old;
        had_ = old != nullptr;
        ::setenv(name, value, 1);
    }
    ~EnvGuard() {
        if (had_) {
            ::setenv(name_.c_str(), saved_.c_str(), 1);
        } else {
            ::unsetenv(name_.c_str());
        }
    }

  private:
    std::string name_;
    std::string saved_;
    bool had_ = false;
};

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

SyntheticConfig small_synth() {
    SyntheticConfig synth;
    synth.train_rows = 260;
    synth.test_rows = 120;
    synth.anomaly_rate = 0.06;
    synth.segment_len = 8;
    synth.seed = 11;
    return synth;
}

RunConfig small_run(const std::string& manifest, const std::string& out_dir) {
    RunConfig cfg;
    cfg.manifest_path = manifest;
    cfg.out_dir = out_dir;
    cfg.seed = 5;
    cfg.threads = 2;
    cfg.embed_dim = 8;
    cfg.top_k = 2;
    cfg.epochs = 2;
    cfg.batch_size = 64;
    cfg.baselines = {BaselineKind::pca, BaselineKind::knn};
    return cfg;
}

}  // namespace

TEST_CASE("ini parser handles sections, comments and whitespace") {
    const std::string text =
        "# leading comment\n"
        "\n"
        "[Dataset]\n"
        "  kind =  generic \n"
        "; another comment\n"
        "train=a.csv\n"
        "[extra]\n"
        "expr = a=b\n";
    IniFile ini = parse_ini(text, "mem.ini");
    REQUIRE(ini.sections.size() == 2);
    CHECK(ini.sections[0].name == "dataset");  // section names fold to lowercase
    CHECK(ini.find("dataset", "kind")->value == "generic");
    CHECK(ini.find("dataset", "train")->value == "a.csv");
    // values keep everything after the first '='
    CHECK(ini.find("extra", "expr")->value == "a=b");
    CHECK(ini.find("extra", "missing") == nullptr);
    CHECK(ini.find("nope", "kind") == nullptr);
}

TEST_CASE("ini parser rejects malformed input") {
    CHECK_THROWS_AS(parse_ini("key = 1\n", "m"), ParseError);            // before any section
    CHECK_THROWS_AS(parse_ini("[sec\nk = 1\n", "m"), ParseError);        // unterminated header
    CHECK_THROWS_AS(parse_ini("[]\n", "m"), ParseError);                 // empty name
    CHECK_THROWS_AS(parse_ini("[s]\njust a line\n", "m"), ParseError);   // no '='
    CHECK_THROWS_AS(parse_ini("[s]\n= v\n", "m"), ParseError);           // empty key
    CHECK_THROWS_AS(parse_ini("[s]\na = 1\na = 2\n", "m"), ParseError);  // duplicate

    try {
        parse_ini("[s]\nok = 1\nbroken line\n", "conf.ini");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("conf.ini") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);  // 1-based line number
    }
}

TEST_CASE("dataset manifest: defaults, full form, and schema errors") {
    testsup::TempDir dir("manifest");
    write_text_file(dir.str("m.ini"),
                    "[dataset]\ntrain = tr.csv\ntest = te.csv\n");
    DatasetManifest m = load_manifest(dir.str("m.ini"));
    CHECK(m.kind == DatasetKind::generic);
    CHECK(m.train_csv == "tr.csv");
    CHECK(m.test_csv == "te.csv");
    CHECK(m.window == 5);
    CHECK(m.anomaly_rate == 0.0);  // unset until declared

    write_text_file(dir.str("full.ini"),
                    "[dataset]\nkind = wadi\ntrain = a\ntest = b\nwindow = 7\n"
                    "anomaly_rate = 0.1\ndownsample_block = 20\ncandidates = c.txt\n");
    DatasetManifest full = load_manifest(dir.str("full.ini"));
    CHECK(full.kind == DatasetKind::wadi);
    CHECK(full.window == 7);
    CHECK(full.anomaly_rate == doctest::Approx(0.1));
    CHECK(full.downsample_block == 20);
    CHECK(full.candidates == "c.txt");

    auto expect_config_error = [&](const std::string& body) {
        write_text_file(dir.str("bad.ini"), body);
        CHECK_THROWS_AS(load_manifest(dir.str("bad.ini")), ConfigError);
    };
    expect_config_error("[dataset]\ntrain = a\ntest = b\nwibble = 1\n");   // unknown key
    expect_config_error("[dataset]\ntrain = a\ntest = b\n[model]\nx=1\n"); // foreign section
    expect_config_error("[dataset]\ntrain = a\n");                         // missing test
    expect_config_error("[dataset]\ntrain = a\ntest = b\nanomaly_rate = 1\n");
    expect_config_error("[dataset]\ntrain = a\ntest = b\nwindow = 0\n");
    expect_config_error("[dataset]\ntrain = a\ntest = b\nkind = csv\n");
}

TEST_CASE("run config: defaults, full parse, and value validation") {
    RunConfig defaults = run_config_from_ini(IniFile{}, "(defaults)");
    CHECK(defaults.out_dir == "out");
    CHECK(defaults.embed_dim == 64);
    CHECK(defaults.top_k == 15);
    CHECK(defaults.epochs == 25);
    CHECK(defaults.lr == doctest::Approx(1e-3));
    CHECK(defaults.head_mode == HeadMode::gaussian);
    CHECK(defaults.baselines.size() == 4);

    const std::string text =
        "[run]\nmanifest = m.ini\nout_dir = results\nseed = 9\nthreads = 3\n"
        "[model]\nembed_dim = 16\ntop_k = 4\nhead_mode = point\nleaky_slope = 0.1\n"
        "sigma_floor = 1e-5\nper_node_attention = true\nhead_hidden = 2\n"
        "[train]\nepochs = 7\nlr = 0.01\nbeta1 = 0.8\nbeta2 = 0.95\nbatch_size = 32\n"
        "refresh = per-step\nshuffle = false\ngrad_clip = 2.5\n"
        "[baselines]\nmodels = var, pca\nknn_k = 9\nae_epochs = 3\n";
    RunConfig cfg = run_config_from_ini(parse_ini(text, "m"), "m");
    CHECK(cfg.manifest_path == "m.ini");
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.seed == 9);
    CHECK(cfg.threads == 3);
    CHECK(cfg.embed_dim == 16);
    CHECK(cfg.top_k == 4);
    CHECK(cfg.head_mode == HeadMode::point);
    CHECK(cfg.leaky_slope == doctest::Approx(0.1));
    CHECK(cfg.sigma_floor == doctest::Approx(1e-5));
    CHECK(cfg.per_node_attention);
    CHECK(cfg.head_hidden == 2);
    CHECK(cfg.epochs == 7);
    CHECK(cfg.lr == doctest::Approx(0.01));
    CHECK(cfg.beta1 == doctest::Approx(0.8));
    CHECK(cfg.beta2 == doctest::Approx(0.95));
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.refresh == AdjacencyRefresh::per_step);
    CHECK_FALSE(cfg.shuffle);
    CHECK(cfg.grad_clip == doctest::Approx(2.5));
    REQUIRE(cfg.baselines.size() == 2);
    CHECK(cfg.baselines[0] == BaselineKind::var);
    CHECK(cfg.baselines[1] == BaselineKind::pca);
    CHECK(cfg.knn_k == 9);
    CHECK(cfg.ae_epochs == 3);

    auto reject = [](const std::string& body) {
        CHECK_THROWS_AS(run_config_from_ini(parse_ini(body, "m"), "m"), ConfigError);
    };
    reject("[train]\nepochs = soon\n");
    reject("[train]\nepochs = -3\n");
    reject("[train]\nshuffle = maybe\n");
    reject("[train]\nlr = fast\n");
    reject("[train]\nepoch = 3\n");       // unknown key
    reject("[training]\nepochs = 3\n");   // unknown section
    reject("[model]\nhead_mode = huber\n");
    reject("[baselines]\nmodels = pca,svm\n");
}

TEST_CASE("run config round-trips through its serialization, with a stable hash") {
    RunConfig cfg;
    cfg.manifest_path = "data/manifest.ini";
    cfg.seed = 42;
    cfg.embed_dim = 12;
    cfg.head_mode = HeadMode::point;
    cfg.refresh = AdjacencyRefresh::once;
    cfg.baselines = {BaselineKind::ae, BaselineKind::var};
    cfg.grad_clip = 0.0;

    const std::string text = serialize(cfg);
    RunConfig back = run_config_from_ini(parse_ini(text, "mem"), "mem");
    CHECK(serialize(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));

    RunConfig other = cfg;
    other.seed = 43;
    CHECK(config_hash(other) != config_hash(cfg));
    CHECK(config_hash(cfg).size() == 16);  // 64-bit hex
}

TEST_CASE("environment variables override file values, scoped by section") {
    testsup::TempDir dir("env");
    write_text_file(dir.str("run.ini"), "[train]\nepochs = 4\n[model]\nembed_dim = 8\n");

    {
        EnvGuard epochs("GLUE_TRAIN_EPOCHS", "9");
        EnvGuard mode("GLUE_MODEL_HEAD_MODE", "point");
        EnvGuard unrelated("GLUE_NASA_DIR", "/data/nasa");  // no config section: ignored
        RunConfig cfg = load_run_config(dir.str("run.ini"));
        CHECK(cfg.epochs == 9);
        CHECK(cfg.embed_dim == 8);  // untouched file value survives
        CHECK(cfg.head_mode == HeadMode::point);
    }
    RunConfig cfg = load_run_config(dir.str("run.ini"));
    CHECK(cfg.epochs == 4);  // override gone with the variable
    CHECK(cfg.head_mode == HeadMode::gaussian);

    {
        // A typo inside a real section is an unknown key, hence an error.
        EnvGuard typo("GLUE_TRAIN_EPOCS", "9");
        CHECK_THROWS_AS(load_run_config(dir.str("run.ini")), ConfigError);
    }
    {
        // Manifests only listen to [dataset] overrides.
        write_text_file(dir.str("m.ini"), "[dataset]\ntrain = a\ntest = b\n");
        EnvGuard window("GLUE_DATASET_WINDOW", "11");
        EnvGuard foreign("GLUE_TRAIN_EPOCHS", "9");
        DatasetManifest m = load_manifest(dir.str("m.ini"));
        CHECK(m.window == 11);
    }
}

TEST_CASE("hyper clamps top_k to the sensor count") {
    RunConfig cfg;
    cfg.top_k = 15;
    ModelHyper h = cfg.hyper(5, 4);
    CHECK(h.n_sensors == 5);
    CHECK(h.window == 4);
    CHECK(h.top_k == 4);  // at most n-1 neighbors exist
    CHECK(cfg.hyper(30, 5).top_k == 15);
}

TEST_CASE("synthetic generator: shapes, labels and determinism") {
    SyntheticConfig synth;
    synth.train_rows = 300;
    synth.test_rows = 160;
    synth.anomaly_rate = 0.05;
    synth.segment_len = 8;
    synth.seed = 2;

    SyntheticSeries s = make_synthetic(synth);
    CHECK(s.train.rows() == 300);
    CHECK(s.train.cols() == 5);
    CHECK(s.test.rows() == 160);
    CHECK(s.sensor_names.size() == 5);
    REQUIRE(s.train_labels.size() == 300);
    REQUIRE(s.test_labels.size() == 160);
    for (int label : s.train_labels) CHECK(label == 0);

    // Non-overlapping segments make the labeled count exact.
    const std::size_t expect_segments = 1;  // llround(0.05 * 160 / 8)
    std::size_t labeled = 0;
    for (int label : s.test_labels) labeled += label != 0 ? 1 : 0;
    CHECK(labeled == expect_segments * synth.segment_len);

    REQUIRE(s.planted_edges.size() == 4);
    CHECK(s.planted_edges[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(s.planted_edges[1] == std::pair<std::size_t, std::size_t>{0, 3});
    CHECK(s.planted_edges[2] == std::pair<std::size_t, std::size_t>{1, 3});
    CHECK(s.planted_edges[3] == std::pair<std::size_t, std::size_t>{2, 4});

    // Every labeled row sticks out in robust units of the clean train split.
    RobustStats stats = robust_stats(s.train);
    for (std::size_t t = 0; t < s.test.rows(); ++t) {
        if (s.test_labels[t] == 0) continue;
        double worst = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            worst = std::max(worst, std::abs(s.test(t, j) - stats.median[j]) / stats.iqr[j]);
        }
        CHECK(worst > 3.0);
    }

    SyntheticSeries again = make_synthetic(synth);
    bool identical = true;
    for (std::size_t i = 0; i < s.test.size(); ++i) {
        identical = identical && s.test[i] == again.test[i];
    }
    CHECK(identical);
    CHECK(again.test_labels == s.test_labels);

    SyntheticConfig reseeded = synth;
    reseeded.seed = 3;
    SyntheticSeries other = make_synthetic(reseeded);
    bool differs = false;
    for (std::size_t i = 0; i < s.train.size() && !differs; ++i) {
        differs = s.train[i] != other.train[i];
    }
    CHECK(differs);
}

TEST_CASE("synthetic generator rejects impossible settings") {
    SyntheticConfig synth;
    synth.segment_len = 0;
    CHECK_THROWS_AS(make_synthetic(synth), ConfigError);
    synth = {};
    synth.anomaly_rate = 0.6;
    CHECK_THROWS_AS(make_synthetic(synth), ConfigError);
    synth = {};
    synth.test_rows = 10;
    CHECK_THROWS_AS(make_synthetic(synth), ConfigError);
    synth = {};
    synth.shift_sigmas = 0.0;
    CHECK_THROWS_AS(make_synthetic(synth), ConfigError);
}

TEST_CASE("write_synthetic produces loadable CSVs and a relative manifest") {
    testsup::TempDir dir("synthfiles");
    SyntheticConfig synth = small_synth();
    SyntheticSeries s = make_synthetic(synth);
    write_synthetic(s, synth, dir.str("data"));

    CHECK(fs::exists(dir.str("data/train.csv")));
    CHECK(fs::exists(dir.str("data/test.csv")));
    DatasetManifest m = load_manifest(dir.str("data/manifest.ini"));
    CHECK(m.train_csv == "train.csv");  // relative to the manifest
    CHECK(m.window == 5);

    std::ifstream in(dir.str("data/test.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "timestamp,s0,s1,s2,s3,s4,label");
    CHECK(count_lines(dir.str("data/test.csv")) == synth.test_rows + 1);
}

TEST_CASE("command pipeline end to end on synthetic data") {
    testsup::TempDir dir("pipeline");
    SyntheticConfig synth = small_synth();
    write_synthetic(make_synthetic(synth), synth, dir.str("data"));
    RunConfig cfg = small_run(dir.str("data/manifest.ini"), dir.str("run"));

    // preprocess
    cmd_preprocess(cfg);
    REQUIRE(fs::exists(dir.str("run/dataset/dataset.json")));
    DatasetBundle bundle = load_bundle(dir.str("run/dataset"));
    CHECK(bundle.train.n_sensors() == 5);
    CHECK(bundle.train.n_times() == synth.train_rows);
    CHECK(bundle.test.n_times() == synth.test_rows);
    CHECK(bundle.test.has_labels());

    // train
    cmd_train(cfg);
    REQUIRE(fs::exists(dir.str("run/model.ckpt")));
    CHECK(count_lines(dir.str("run/loss.csv")) == cfg.epochs + 1);
    CHECK(read_text_file(dir.str("run/loss.svg")).find("<svg") != std::string::npos);
    Checkpoint ckp = load_checkpoint(dir.str("run/model.ckpt"));
    CHECK(ckp.sensor_names == bundle.train.sensor_names);
    CHECK(ckp.params.hyper.window == 5);
    CHECK(ckp.params.hyper.top_k == 2);
    CHECK(ckp.adjacency.n() == 5);

    // detect
    cmd_detect(cfg);
    const std::size_t test_windows = synth.test_rows - 5;
    CHECK(count_lines(dir.str("run/report/scores.csv")) == test_windows + 1);
    const std::string metrics_text = read_text_file(dir.str("run/report/metrics.json"));
    auto metrics = nlohmann::json::parse(metrics_text);
    CHECK(metrics.at("model") == "glue");
    CHECK(metrics.at("labeled") == true);
    CHECK(metrics.at("test_points") == test_windows);
    for (const char* sensor : {"s0", "s1", "s2", "s3", "s4"}) {
        CHECK(fs::exists(dir.str(std::string("run/report/bands/") + sensor + ".svg")));
        CHECK(fs::exists(dir.str(std::string("run/report/bands/") + sensor + ".csv")));
    }

    // evaluate
    cmd_evaluate(cfg);
    auto evaluation =
        nlohmann::json::parse(read_text_file(dir.str("run/evaluation/report.json")));
    REQUIRE(evaluation.at("models").size() == 1);
    CHECK(evaluation.at("models")[0].at("model") == "glue");
    double f1 = evaluation.at("models")[0].at("f1").get<double>();
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
    CHECK(evaluation.at("models")[0].at("config_hash") == config_hash(cfg));

    // export
    cmd_export(cfg);
    CHECK(count_lines(dir.str("run/export/embeddings.csv")) == 6);
    CHECK(count_lines(dir.str("run/export/embedding_projection.csv")) == 6);
    CHECK(count_lines(dir.str("run/export/graph.csv")) == 1 + ckp.adjacency.edge_count());

    // determinism across a fresh pipeline
    RunConfig cfg2 = cfg;
    cfg2.out_dir = dir.str("run2");
    cmd_preprocess(cfg2);
    cmd_train(cfg2);
    cmd_detect(cfg2);
    CHECK(testsup::files_identical(dir.str("run/model.ckpt"), dir.str("run2/model.ckpt")));
    CHECK(testsup::files_identical(dir.str("run/report/scores.csv"),
                                   dir.str("run2/report/scores.csv")));
    CHECK(testsup::files_identical(dir.str("run/dataset/train.bin"),
                                   dir.str("run2/dataset/train.bin")));
}

TEST_CASE("compare writes per-model reports and the consolidated table") {
    testsup::TempDir dir("compare");
    SyntheticConfig synth = small_synth();
    write_synthetic(make_synthetic(synth), synth, dir.str("data"));
    RunConfig cfg = small_run(dir.str("data/manifest.ini"), dir.str("run"));
    cfg.epochs = 1;

    cmd_preprocess(cfg);
    cmd_compare(cfg);

    auto report = nlohmann::json::parse(read_text_file(dir.str("run/compare/report.json")));
    const auto& models = report.at("models");
    REQUIRE(models.size() == 4);  // glue, gdn + selected {pca, knn}
    CHECK(models[0].at("model") == "glue");
    CHECK(models[1].at("model") == "gdn");
    CHECK(models[2].at("model") == "pca");
    CHECK(models[3].at("model") == "knn");
    CHECK(models[0].contains("mse"));       // forecasters report forecast error
    CHECK_FALSE(models[2].contains("mse")); // reconstruction models do not
    for (const char* model : {"glue", "gdn", "pca", "knn"}) {
        CHECK(fs::exists(dir.str(std::string("run/compare/") + model + "/scores.csv")));
        CHECK(fs::exists(dir.str(std::string("run/compare/") + model + "/metrics.json")));
    }
    const std::string table = read_text_file(dir.str("run/compare/report.txt"));
    CHECK(table.find("glue") != std::string::npos);
    CHECK(table.find("knn") != std::string::npos);
    CHECK(table.find(config_hash(cfg)) != std::string::npos);
}

TEST_CASE("point-head pipeline: gdn naming and no band plots") {
    testsup::TempDir dir("gdn");
    SyntheticConfig synth = small_synth();
    write_synthetic(make_synthetic(synth), synth, dir.str("data"));
    RunConfig cfg = small_run(dir.str("data/manifest.ini"), dir.str("run"));
    cfg.head_mode = HeadMode::point;
    cfg.epochs = 1;

    cmd_preprocess(cfg);
    cmd_train(cfg);
    cmd_detect(cfg);
    auto metrics = nlohmann::json::parse(read_text_file(dir.str("run/report/metrics.json")));
    CHECK(metrics.at("model") == "gdn");
    CHECK_FALSE(fs::exists(dir.str("run/report/bands")));
}

TEST_CASE("commands fail cleanly on missing prerequisites") {
    testsup::TempDir dir("missing");
    RunConfig cfg;
    cfg.out_dir = dir.str("fresh");

    CHECK_THROWS_AS(cmd_preprocess(cfg), ConfigError);  // no manifest configured
    cfg.manifest_path = dir.str("nope.ini");
    CHECK_THROWS_AS(cmd_preprocess(cfg), IoError);      // manifest file missing
    CHECK_THROWS_AS(cmd_train(cfg), IoError);           // manifest needed before bundle
    CHECK_THROWS_AS(cmd_evaluate(cfg), ConfigError);    // no detection report

    // With a manifest but no preprocessed bundle, train and detect both point
    // at the missing dataset.
    SyntheticConfig synth = small_synth();
    write_synthetic(make_synthetic(synth), synth, dir.str("data"));
    cfg.manifest_path = dir.str("data/manifest.ini");
    try {
        cmd_train(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("preprocess") != std::string::npos);
    }
    CHECK_THROWS_AS(cmd_detect(cfg), ConfigError);
    CHECK_THROWS_AS(cmd_export(cfg), ConfigError);  // no checkpoint yet
}

TEST_CASE("detect refuses a checkpoint whose sensors differ from the dataset") {
    testsup::TempDir dir("mismatch");
    SyntheticConfig synth = small_synth();
    write_synthetic(make_synthetic(synth), synth, dir.str("data"));
    RunConfig cfg = small_run(dir.str("data/manifest.ini"), dir.str("run"));
    cfg.epochs = 1;
    cmd_preprocess(cfg);
    cmd_train(cfg);

    // Second dataset with different sensor names, preprocessed into the same
    // layout slot the checkpoint will be matched against.
    std::string train_csv = "timestamp,alpha,beta,label\n";
    std::string test_csv = "timestamp,alpha,beta,label\n";
    for (int t = 0; t < 40; ++t) {
        const std::string row = std::to_string(t) + "," +
                                format_double(0.1 * t) + "," +
                                format_double(std::sin(0.3 * t)) + ",0\n";
        train_csv += row;
        test_csv += row;
    }
    fs::create_directories(dir.str("other"));
    write_text_file(dir.str("other/train.csv"), train_csv);
    write_text_file(dir.str("other/test.csv"), test_csv);
    write_text_file(dir.str("other/manifest.ini"),
                    "[dataset]\ntrain = train.csv\ntest = test.csv\n");
    RunConfig other = cfg;
    other.manifest_path = dir.str("other/manifest.ini");
    cmd_preprocess(other);  // overwrites run/dataset with the alpha/beta bundle

    try {
        cmd_detect(other);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sensor") != std::string::npos);
        CHECK(msg.find("s0") != std::string::npos);     // checkpoint-only sensors listed
        CHECK(msg.find("alpha") != std::string::npos);  // dataset-only sensors listed
    }
}

TEST_CASE("threshold rate resolution: config beats manifest beats train labels") {
    testsup::TempDir dir("rate");
    SyntheticConfig synth = small_synth();
    write_synthetic(make_synthetic(synth), synth, dir.str("data"));
    RunConfig cfg = small_run(dir.str("data/manifest.ini"), dir.str("run"));
    cfg.epochs = 1;
    cmd_preprocess(cfg);
    cmd_train(cfg);

    auto detect_rate_used = [&](const RunConfig& run_cfg) {
        cmd_detect(run_cfg);
        auto metrics = nlohmann::json::parse(
            read_text_file(dir.str("run/report/metrics.json")));
        return metrics.at("anomaly_rate").get<double>();
    };

    // Manifest declares the generator's rate.
    CHECK(detect_rate_used(cfg) == doctest::Approx(synth.anomaly_rate));

    // An explicit run-config rate wins over the manifest.
    RunConfig strict = cfg;
    strict.detect_rate = 0.01;
    CHECK(detect_rate_used(strict) == doctest::Approx(0.01));

    // Without either, the (clean) training split cannot supply a rate.
    std::string manifest_text = read_text_file(dir.str("data/manifest.ini"));
    const std::string rate_line = "anomaly_rate = 0.06\n";
    std::size_t at = manifest_text.find(rate_line);
    REQUIRE(at != std::string::npos);
    manifest_text.erase(at, rate_line.size());
    write_text_file(dir.str("data/manifest.ini"), manifest_text);
    CHECK_THROWS_AS(cmd_detect(cfg), ConfigError);

    // detect_rate parsing is validated.
    CHECK_THROWS_AS(run_config_from_ini(
                        parse_ini("[run]\ndetect_rate = 1.5\n", "m"), "m"),
                    ConfigError);
}

TEST_CASE("preprocess respects the manifest kind and column conventions") {
    testsup::TempDir dir("kinds");
    // Uppercase Time/Label headers and a trajectory column, to exercise the
    // case-insensitive sniffing.
    std::string csv = "Time,p1,p2,Label,trajectory\n";
    for (int t = 0; t < 60; ++t) {
        csv += std::to_string(t) + "," + format_double(std::sin(0.2 * t)) + "," +
               format_double(std::cos(0.2 * t)) + ",0," + (t < 30 ? "a" : "b") + "\n";
    }
    write_text_file(dir.str("train.csv"), csv);
    write_text_file(dir.str("test.csv"), csv);
    write_text_file(dir.str("manifest.ini"),
                    "[dataset]\ntrain = train.csv\ntest = test.csv\n");
    RunConfig cfg;
    cfg.manifest_path = dir.str("manifest.ini");
    cfg.out_dir = dir.str("out");
    cmd_preprocess(cfg);
    DatasetBundle bundle = load_bundle(dir.str("out/dataset"));
    CHECK(bundle.train.n_sensors() == 2);  // time/label/trajectory not sensors
    CHECK(bundle.train.sensor_names == std::vector<std::string>{"p1", "p2"});
    CHECK(bundle.train.trajectories().size() == 2);
}
