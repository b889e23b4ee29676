#include "glue/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "glue/error.hpp"
#include "glue/util.hpp"

namespace glue {

void fill_missing(RawTable& table) {
    const std::size_t n = table.n_sensors();
    for (const auto& [begin, end] : table.trajectories()) {
        for (std::size_t j = 0; j < n; ++j) {
            // forward
            double last = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t r = begin; r < end; ++r) {
                double& v = table.at(r, j);
                if (std::isnan(v))
                    v = last;
                else
                    last = v;
            }
            // backward
            double next = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t r = end; r-- > begin;) {
                double& v = table.at(r, j);
                if (std::isnan(v))
                    v = next;
                else
                    next = v;
            }
            // zero
            for (std::size_t r = begin; r < end; ++r) {
                double& v = table.at(r, j);
                if (std::isnan(v)) v = 0.0;
            }
        }
    }
}

RawTable downsample_median(const RawTable& table, std::size_t block_rows) {
    if (block_rows == 0) throw ConfigError("downsample block size must be >= 1");
    RawTable out;
    out.sensor_names = table.sensor_names;
    const std::size_t n = table.n_sensors();
    const bool labeled = !table.labels.empty();

    std::vector<double> block;
    block.reserve(block_rows);
    for (const auto& [begin, end] : table.trajectories()) {
        if (begin < end) out.trajectory_starts.push_back(out.n_rows);
        for (std::size_t b = begin; b < end; b += block_rows) {
            const std::size_t e = std::min(b + block_rows, end);
            for (std::size_t j = 0; j < n; ++j) {
                block.clear();
                for (std::size_t r = b; r < e; ++r) block.push_back(table.at(r, j));
                out.values.push_back(median(block));
            }
            if (labeled) {
                int any = 0;
                for (std::size_t r = b; r < e; ++r) any |= table.labels[r];
                out.labels.push_back(any);
            }
            ++out.n_rows;
        }
    }
    return out;
}

std::vector<std::string> drop_zero_variance(RawTable& train, RawTable& test) {
    if (train.sensor_names != test.sensor_names)
        throw ConfigError("train/test splits disagree on sensor columns");
    if (train.n_rows == 0) throw ConfigError("training split is empty");

    const std::size_t n = train.n_sensors();
    std::vector<bool> keep(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const double first = train.at(0, j);
        for (std::size_t r = 1; r < train.n_rows; ++r) {
            if (train.at(r, j) != first) {
                keep[j] = true;
                break;
            }
        }
    }

    std::vector<std::string> dropped;
    std::vector<std::string> kept_names;
    std::vector<std::size_t> kept_cols;
    for (std::size_t j = 0; j < n; ++j) {
        if (keep[j]) {
            kept_cols.push_back(j);
            kept_names.push_back(train.sensor_names[j]);
        } else {
            dropped.push_back(train.sensor_names[j]);
        }
    }
    if (kept_cols.empty()) throw NumericError("variance filter removed every sensor");
    if (dropped.empty()) return dropped;

    auto compact = [&](RawTable& t) {
        std::vector<double> v;
        v.reserve(t.n_rows * kept_cols.size());
        for (std::size_t r = 0; r < t.n_rows; ++r)
            for (std::size_t c : kept_cols) v.push_back(t.at(r, c));
        t.values = std::move(v);
        t.sensor_names = kept_names;
    };
    compact(train);
    compact(test);
    return dropped;
}

std::vector<NormStat> normalize(RawTable& train, RawTable& test) {
    if (train.sensor_names != test.sensor_names)
        throw ConfigError("train/test splits disagree on sensor columns");
    const std::size_t n = train.n_sensors();
    const std::size_t t_rows = train.n_rows;
    if (t_rows == 0) throw ConfigError("training split is empty");

    std::vector<NormStat> stats(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t r = 0; r < t_rows; ++r) sum += train.at(r, j);
        const double mean = sum / static_cast<double>(t_rows);
        double sq = 0.0;
        for (std::size_t r = 0; r < t_rows; ++r) {
            const double d = train.at(r, j) - mean;
            sq += d * d;
        }
        const double std_dev = std::sqrt(sq / static_cast<double>(t_rows));
        if (std_dev == 0.0)
            throw NumericError("sensor '" + train.sensor_names[j] +
                               "' has zero training std; run the variance filter first");
        stats[j] = NormStat{mean, std_dev};
    }

    auto apply = [&](RawTable& t) {
        for (std::size_t r = 0; r < t.n_rows; ++r)
            for (std::size_t j = 0; j < n; ++j)
                t.at(r, j) = (t.at(r, j) - stats[j].mean) / stats[j].std;
    };
    apply(train);
    apply(test);
    return stats;
}

namespace {

TimeSeriesDataset to_dataset(const RawTable& t, const std::vector<NormStat>& stats,
                             const std::vector<std::string>& dropped) {
    TimeSeriesDataset ds;
    ds.sensor_names = t.sensor_names;
    ds.values = Matrix(t.n_rows, t.n_sensors());
    std::copy(t.values.begin(), t.values.end(), ds.values.data().begin());
    ds.labels = t.labels;
    ds.trajectory_starts = t.trajectory_starts;
    if (ds.trajectory_starts.empty() && t.n_rows > 0) ds.trajectory_starts.push_back(0);
    ds.norm_stats = stats;
    ds.dropped_sensors = dropped;
    ds.validate();
    return ds;
}

}  // namespace

DatasetBundle preprocess(RawTable train, RawTable test, const PreprocessOptions& opt) {
    fill_missing(train);
    fill_missing(test);
    if (opt.kind == DatasetKind::wadi) {
        train = downsample_median(train, opt.downsample_block);
        test = downsample_median(test, opt.downsample_block);
    }
    std::vector<std::string> dropped = drop_zero_variance(train, test);
    std::vector<NormStat> stats = normalize(train, test);

    DatasetBundle bundle;
    bundle.kind = opt.kind;
    bundle.train = to_dataset(train, stats, dropped);
    bundle.test = to_dataset(test, stats, dropped);
    return bundle;
}

}  // namespace glue
