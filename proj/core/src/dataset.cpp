#include "glue/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "glue/error.hpp"
#include "glue/util.hpp"
#include "json.hpp"

namespace glue {

namespace {

constexpr char kBinMagic[9] = "GLUETSD\x01";
constexpr std::uint32_t kBinVersion = 1;
constexpr int kSidecarVersion = 1;

}  // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::generic: return "generic";
        case DatasetKind::wadi: return "wadi";
        case DatasetKind::nasa: return "nasa";
    }
    throw ConfigError("unknown dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "generic") return DatasetKind::generic;
    if (s == "wadi") return DatasetKind::wadi;
    if (s == "nasa") return DatasetKind::nasa;
    throw ConfigError("unknown dataset kind '" + s + "' (expected generic|wadi|nasa)");
}

std::vector<std::pair<std::size_t, std::size_t>> TimeSeriesDataset::trajectories() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < trajectory_starts.size(); ++i) {
        const std::size_t begin = trajectory_starts[i];
        const std::size_t end =
            i + 1 < trajectory_starts.size() ? trajectory_starts[i + 1] : n_times();
        out.emplace_back(begin, end);
    }
    return out;
}

void TimeSeriesDataset::validate() const {
    if (sensor_names.size() != n_sensors())
        throw ShapeError("dataset: " + std::to_string(sensor_names.size()) + " sensor names for " +
                         std::to_string(n_sensors()) + " columns");
    if (!all_finite(values)) throw NumericError("dataset holds non-finite values");
    if (!labels.empty() && labels.size() != n_times())
        throw ShapeError("dataset: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n_times()) + " time steps");
    for (int l : labels)
        if (l != 0 && l != 1) throw ShapeError("dataset labels must be 0 or 1");
    if (norm_stats.size() != n_sensors())
        throw ShapeError("dataset: " + std::to_string(norm_stats.size()) + " norm stats for " +
                         std::to_string(n_sensors()) + " sensors");
    if (n_times() > 0) {
        if (trajectory_starts.empty() || trajectory_starts.front() != 0)
            throw ShapeError("dataset: first trajectory must start at row 0");
        for (std::size_t i = 1; i < trajectory_starts.size(); ++i)
            if (trajectory_starts[i] <= trajectory_starts[i - 1] ||
                trajectory_starts[i] >= n_times())
                throw ShapeError("dataset: trajectory starts must be strictly increasing row indices");
    }
}

double denormalize(double v, const NormStat& s) { return v * s.std + s.mean; }

Matrix denormalize(const Matrix& values, const std::vector<NormStat>& stats) {
    if (values.cols() != stats.size())
        throw ShapeError("denormalize: " + std::to_string(stats.size()) + " stats for " +
                         std::to_string(values.cols()) + " columns");
    Matrix out = values;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = denormalize(out(r, c), stats[c]);
    return out;
}

WindowSet::WindowSet(const TimeSeriesDataset& ds, std::size_t w, std::size_t stride)
    : ds_(&ds), w_(w) {
    if (w == 0) throw ConfigError("window length must be >= 1");
    if (stride == 0) throw ConfigError("window stride must be >= 1");
    for (const auto& [begin, end] : ds.trajectories()) {
        if (end - begin <= w)
            throw ShapeError("make_windows: trajectory of length " + std::to_string(end - begin) +
                             " cannot host a window of length " + std::to_string(w));
        for (std::size_t t = begin + w; t < end; t += stride) targets_.push_back(t);
    }
}

WindowBatch WindowSet::gather(std::span<const std::size_t> order) const {
    const std::size_t n = ds_->n_sensors();
    WindowBatch batch;
    batch.inputs.reserve(order.size());
    batch.targets = Matrix(order.size(), n);
    batch.target_times.reserve(order.size());
    if (ds_->has_labels()) batch.target_labels.reserve(order.size());

    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t idx = order[k];
        if (idx >= targets_.size())
            throw ShapeError("window gather index " + std::to_string(idx) + " out of range " +
                             std::to_string(targets_.size()));
        const std::size_t t = targets_[idx];
        Matrix x(n, w_);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t u = 0; u < w_; ++u) x(j, u) = ds_->values(t - w_ + u, j);
        batch.inputs.push_back(std::move(x));
        for (std::size_t j = 0; j < n; ++j) batch.targets(k, j) = ds_->values(t, j);
        batch.target_times.push_back(t);
        if (ds_->has_labels()) batch.target_labels.push_back(ds_->labels[t]);
    }
    return batch;
}

WindowBatch WindowSet::all() const {
    std::vector<std::size_t> order(size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return gather(order);
}

WindowSet make_windows(const TimeSeriesDataset& ds, std::size_t w, std::size_t stride) {
    return WindowSet(ds, w, stride);
}

namespace {

void save_split(const TimeSeriesDataset& ds, const std::string& path) {
    BinWriter w;
    w.raw(std::string_view(kBinMagic, 8));
    w.u32(kBinVersion);
    w.u64(ds.n_times());
    w.u64(ds.n_sensors());
    w.u64(ds.labels.size());
    w.u64(ds.trajectory_starts.size());
    w.f64_span(ds.values.data());
    for (int l : ds.labels) w.u8(static_cast<std::uint8_t>(l));
    for (std::size_t s : ds.trajectory_starts) w.u64(s);
    for (const NormStat& s : ds.norm_stats) {
        w.f64(s.mean);
        w.f64(s.std);
    }
    w.save(path);
}

void load_split(TimeSeriesDataset& ds, const std::string& path) {
    BinReader r = BinReader::open(path);
    if (r.raw(8) != std::string_view(kBinMagic, 8))
        throw IoError("'" + path + "' is not a dataset binary (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kBinVersion)
        throw IoError("'" + path + "' has unsupported dataset version " + std::to_string(version));
    const std::size_t rows = static_cast<std::size_t>(r.u64());
    const std::size_t cols = static_cast<std::size_t>(r.u64());
    const std::size_t n_labels = static_cast<std::size_t>(r.u64());
    const std::size_t n_traj = static_cast<std::size_t>(r.u64());
    if (n_labels != 0 && n_labels != rows)
        throw IoError("'" + path + "' label count disagrees with row count");

    ds.values = Matrix(rows, cols);
    r.f64_span(ds.values.data());
    ds.labels.resize(n_labels);
    for (std::size_t i = 0; i < n_labels; ++i) ds.labels[i] = r.u8();
    ds.trajectory_starts.resize(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) ds.trajectory_starts[i] = r.u64();
    ds.norm_stats.resize(cols);
    for (NormStat& s : ds.norm_stats) {
        s.mean = r.f64();
        s.std = r.f64();
    }
    if (!r.at_end()) throw IoError("'" + path + "' has trailing bytes");
}

}  // namespace

void save_bundle(const DatasetBundle& bundle, const std::string& dir) {
    bundle.train.validate();
    bundle.test.validate();
    if (bundle.train.sensor_names != bundle.test.sensor_names)
        throw ShapeError("bundle splits disagree on sensor names");
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_split(bundle.train, (base / "train.bin").string());
    save_split(bundle.test, (base / "test.bin").string());

    nlohmann::ordered_json meta;
    meta["format"] = "glue-dataset";
    meta["version"] = kSidecarVersion;
    meta["kind"] = to_string(bundle.kind);
    meta["sensors"] = bundle.train.sensor_names;
    meta["dropped_sensors"] = bundle.train.dropped_sensors;
    nlohmann::ordered_json stats = nlohmann::ordered_json::array();
    for (const NormStat& s : bundle.train.norm_stats)
        stats.push_back({{"mean", s.mean}, {"std", s.std}});
    meta["norm_stats"] = std::move(stats);
    meta["train_rows"] = bundle.train.n_times();
    meta["test_rows"] = bundle.test.n_times();
    meta["train_labeled"] = bundle.train.has_labels();
    meta["test_labeled"] = bundle.test.has_labels();
    write_text_file((base / "dataset.json").string(), meta.dump(2) + "\n");
}

DatasetBundle load_bundle(const std::string& dir) {
    const std::filesystem::path base(dir);
    const std::string meta_path = (base / "dataset.json").string();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path, -1, e.what());
    }
    if (meta.value("format", "") != "glue-dataset")
        throw ParseError(meta_path, -1, "not a dataset sidecar");
    if (meta.value("version", 0) != kSidecarVersion)
        throw ParseError(meta_path, -1, "unsupported sidecar version");

    DatasetBundle bundle;
    bundle.kind = dataset_kind_from_string(meta.at("kind").get<std::string>());
    const auto names = meta.at("sensors").get<std::vector<std::string>>();
    const auto dropped = meta.at("dropped_sensors").get<std::vector<std::string>>();
    for (TimeSeriesDataset* ds : {&bundle.train, &bundle.test}) {
        ds->sensor_names = names;
        ds->dropped_sensors = dropped;
    }
    load_split(bundle.train, (base / "train.bin").string());
    load_split(bundle.test, (base / "test.bin").string());
    if (bundle.train.n_times() != meta.at("train_rows").get<std::size_t>() ||
        bundle.test.n_times() != meta.at("test_rows").get<std::size_t>())
        throw ParseError(meta_path, -1, "sidecar row counts disagree with binaries");
    bundle.train.validate();
    bundle.test.validate();
    return bundle;
}

}  // namespace glue
