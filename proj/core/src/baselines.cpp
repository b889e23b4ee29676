#include "glue/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "glue/error.hpp"
#include "glue/linalg.hpp"
#include "glue/rng.hpp"
#include "glue/tape.hpp"

namespace glue {

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::pca: return "pca";
        case BaselineKind::knn: return "knn";
        case BaselineKind::ae: return "ae";
        case BaselineKind::var: return "var";
    }
    throw ConfigError("unknown baseline kind");
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "pca") return BaselineKind::pca;
    if (s == "knn") return BaselineKind::knn;
    if (s == "ae") return BaselineKind::ae;
    if (s == "var") return BaselineKind::var;
    throw ConfigError("unknown baseline '" + s + "' (expected pca|knn|ae|var)");
}

Matrix reconstruction_rows(const WindowBatch& batch) {
    if (batch.size() == 0) throw ShapeError("reconstruction_rows: empty batch");
    const std::size_t n = batch.targets.cols();
    const std::size_t w = batch.inputs[0].cols();
    Matrix rows(batch.size(), n * w);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Matrix& hist = batch.inputs[i];
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t c = 1; c < w; ++c) rows(i, s * w + c - 1) = hist(s, c);
            rows(i, s * w + w - 1) = batch.targets(i, s);
        }
    }
    return rows;
}

Matrix regression_design(const WindowBatch& batch) {
    if (batch.size() == 0) throw ShapeError("regression_design: empty batch");
    const std::size_t n = batch.targets.cols();
    const std::size_t p = batch.inputs[0].cols();
    Matrix design(batch.size(), n * p + 1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Matrix& hist = batch.inputs[i];
        design(i, 0) = 1.0;
        for (std::size_t lag = 1; lag <= p; ++lag)
            for (std::size_t s = 0; s < n; ++s)
                design(i, 1 + (lag - 1) * n + s) = hist(s, p - lag);
    }
    return design;
}

// ---- PCA -------------------------------------------------------------------

PcaModel pca_fit(const Matrix& rows, std::size_t n_components, double variance_fraction) {
    if (rows.rows() < 2) throw ShapeError("pca: need at least 2 rows to fit");
    const std::size_t d = rows.cols();
    if (n_components > d)
        throw ConfigError("pca: " + std::to_string(n_components) + " components exceed the " +
                          std::to_string(d) + "-dimensional input");
    if (!(variance_fraction > 0.0 && variance_fraction <= 1.0))
        throw ConfigError("pca: variance fraction must lie in (0, 1]");

    const SymEigen eig = sym_eigen(covariance(rows));
    PcaModel model;
    model.variances.resize(d);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        model.variances[j] = std::max(eig.values[j], 0.0);  // clamp Jacobi round-off
        total += model.variances[j];
    }
    if (total <= 0.0)
        throw NumericError("pca: the training rows are all identical (zero variance)");

    std::size_t m = n_components;
    if (m == 0) {
        double cum = 0.0;
        for (m = 1; m < d; ++m) {
            cum += model.variances[m - 1];
            if (cum >= variance_fraction * total) break;
        }
    }

    const Matrix means = column_means(rows);
    model.mean.assign(means.data().begin(), means.data().end());
    model.axes = Matrix(d, m);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < m; ++c) model.axes(r, c) = eig.vectors(r, c);
    return model;
}

double pca_score(const PcaModel& model, std::span<const double> x) {
    const std::size_t d = model.mean.size();
    if (x.size() != d)
        throw ShapeError("pca_score: input has " + std::to_string(x.size()) +
                         " entries, model expects " + std::to_string(d));
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < d; ++i) centered[i] = x[i] - model.mean[i];

    const std::size_t m = model.n_components();
    std::vector<double> coords(m, 0.0);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t r = 0; r < d; ++r) coords[c] += model.axes(r, c) * centered[r];

    double score = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
        double recon = 0.0;
        for (std::size_t c = 0; c < m; ++c) recon += model.axes(r, c) * coords[c];
        const double resid = centered[r] - recon;
        score += resid * resid;
    }
    return score;
}

std::vector<double> pca_scores(const PcaModel& model, const Matrix& rows) {
    std::vector<double> scores(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) scores[i] = pca_score(model, rows.row_span(i));
    return scores;
}

// ---- k-nearest-neighbors ----------------------------------------------------

double knn_score(const Matrix& train_rows, std::span<const double> x, std::size_t k) {
    if (k < 1) throw ConfigError("knn: k must be >= 1");
    if (k > train_rows.rows())
        throw ConfigError("knn: k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(train_rows.rows()) + " training windows");
    if (x.size() != train_rows.cols())
        throw ShapeError("knn_score: query has " + std::to_string(x.size()) +
                         " entries, training windows have " + std::to_string(train_rows.cols()));

    std::vector<double> dist(train_rows.rows());
    for (std::size_t i = 0; i < train_rows.rows(); ++i) {
        double sq = 0.0;
        const auto row = train_rows.row_span(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double diff = row[j] - x[j];
            sq += diff * diff;
        }
        dist[i] = std::sqrt(sq);
    }
    // Full sort so the k smallest are summed in ascending order: the result
    // is independent of the training rows' storage order.
    std::sort(dist.begin(), dist.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += dist[i];
    return sum;
}

std::vector<double> knn_scores(const Matrix& train_rows, const Matrix& rows, std::size_t k) {
    std::vector<double> scores(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i)
        scores[i] = knn_score(train_rows, rows.row_span(i), k);
    return scores;
}

// ---- Autoencoder ------------------------------------------------------------

namespace {

struct AeDims {
    std::size_t d, h, b;
};

AeDims ae_dims(std::size_t input_dim, const AeConfig& cfg) {
    AeDims dims{input_dim, cfg.hidden, cfg.bottleneck};
    if (dims.b == 0) dims.b = (input_dim + 3) / 4;
    if (dims.b >= input_dim)
        throw ConfigError("ae: bottleneck " + std::to_string(dims.b) +
                          " must be smaller than the " + std::to_string(input_dim) +
                          "-dimensional input");
    if (dims.h == 0) dims.h = (input_dim + dims.b + 1) / 2;
    if (dims.h < 1) throw ConfigError("ae: hidden width must be >= 1");
    return dims;
}

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-bound, bound);
    return m;
}

ParamSet ae_init(const AeDims& dims, Rng& rng) {
    ParamSet blocks;
    blocks.add("enc1.W", uniform_init(rng, dims.h, dims.d, dims.d));
    blocks.add("enc1.b", Matrix(dims.h, 1));
    blocks.add("enc2.W", uniform_init(rng, dims.b, dims.h, dims.h));
    blocks.add("enc2.b", Matrix(dims.b, 1));
    blocks.add("dec1.W", uniform_init(rng, dims.h, dims.b, dims.b));
    blocks.add("dec1.b", Matrix(dims.h, 1));
    blocks.add("dec2.W", uniform_init(rng, dims.d, dims.h, dims.h));
    blocks.add("dec2.b", Matrix(dims.d, 1));
    return blocks;
}

// One tape over a whole minibatch: columns are batch rows, biases broadcast
// via an all-ones row vector.
double ae_batch_step(const AeModel& model, const Matrix& x_cols, ParamSet& grads) {
    const std::size_t batch = x_cols.cols();
    Tape tape;
    std::vector<std::pair<std::string, NodeId>> leaves;
    for (std::size_t i = 0; i < model.blocks.size(); ++i)
        leaves.emplace_back(model.blocks[i].name, tape.leaf(model.blocks[i].value));
    auto leaf = [&](const char* name) {
        for (const auto& [n, id] : leaves)
            if (n == name) return id;
        throw Error("ae: missing block");
    };
    const NodeId x = tape.leaf(x_cols);
    Matrix ones_row(1, batch);
    for (std::size_t i = 0; i < batch; ++i) ones_row[i] = 1.0;
    const NodeId ones = tape.leaf(std::move(ones_row));
    Matrix neg = x_cols;
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
    const NodeId neg_x = tape.leaf(std::move(neg));

    auto affine = [&](const char* w, const char* b, NodeId in) {
        return tape.add(tape.matmul(leaf(w), in), tape.matmul(leaf(b), ones));
    };
    const NodeId h1 = tape.relu(affine("enc1.W", "enc1.b", x));
    const NodeId z = affine("enc2.W", "enc2.b", h1);
    const NodeId h2 = tape.relu(affine("dec1.W", "dec1.b", z));
    const NodeId xhat = affine("dec2.W", "dec2.b", h2);
    const NodeId root = tape.reduce_sum(tape.square(tape.add(xhat, neg_x)));

    const double scale = 1.0 / static_cast<double>(x_cols.size());
    const auto adjoints = tape.backward(root);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const auto it = adjoints.find(leaves[i].second);
        if (it == adjoints.end()) continue;
        Matrix& g = grads[i].value;
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = it->second[j] * scale;
    }
    return tape.scalar_value(root) * scale;
}

}  // namespace

AeModel ae_fit(const Matrix& rows, const AeConfig& cfg) {
    if (rows.rows() < 1) throw ShapeError("ae: no training rows");
    if (cfg.batch_size < 1) throw ConfigError("ae: batch size must be >= 1");
    if (!(cfg.lr > 0.0)) throw ConfigError("ae: learning rate must be > 0");
    const AeDims dims = ae_dims(rows.cols(), cfg);

    Rng rng(cfg.seed);
    AeModel model;
    model.input_dim = dims.d;
    model.hidden = dims.h;
    model.bottleneck = dims.b;
    model.blocks = ae_init(dims, rng);

    Adam optimizer(AdamConfig{cfg.lr, 0.9, 0.99, 1e-8});
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::vector<std::size_t> order = rng.permutation(rows.rows());
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            Matrix x_cols(rows.cols(), end - begin);
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t j = 0; j < rows.cols(); ++j)
                    x_cols(j, i - begin) = rows(order[i], j);

            ParamSet grads = model.blocks.zeros_like();
            const double loss = ae_batch_step(model, x_cols, grads);
            if (!std::isfinite(loss))
                throw NumericError("ae: non-finite loss at epoch " + std::to_string(epoch));
            optimizer.step(model.blocks, grads);
        }
    }
    return model;
}

double ae_score(const AeModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim)
        throw ShapeError("ae_score: input has " + std::to_string(x.size()) +
                         " entries, model expects " + std::to_string(model.input_dim));
    auto affine = [&](const char* w_name, const char* b_name,
                      const std::vector<double>& in, bool relu) {
        const Matrix& w = model.blocks.at(w_name);
        const Matrix& b = model.blocks.at(b_name);
        std::vector<double> out(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double acc = b(r, 0);
            for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * in[c];
            out[r] = relu && acc < 0.0 ? 0.0 : acc;
        }
        return out;
    };
    const std::vector<double> input(x.begin(), x.end());
    const auto h1 = affine("enc1.W", "enc1.b", input, true);
    const auto z = affine("enc2.W", "enc2.b", h1, false);
    const auto h2 = affine("dec1.W", "dec1.b", z, true);
    const auto xhat = affine("dec2.W", "dec2.b", h2, false);

    double score = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = xhat[i] - x[i];
        score += diff * diff;
    }
    return score;
}

std::vector<double> ae_scores(const AeModel& model, const Matrix& rows) {
    std::vector<double> scores(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) scores[i] = ae_score(model, rows.row_span(i));
    return scores;
}

// ---- Vector autoregression --------------------------------------------------

VarModel var_fit(const WindowBatch& batch) {
    const Matrix design = regression_design(batch);
    const std::size_t k = design.cols();
    if (batch.size() <= k)
        throw ShapeError("var: " + std::to_string(batch.size()) +
                         " equations cannot identify " + std::to_string(k) +
                         " coefficients per sensor");

    // Normal equations, shared Gram matrix for every sensor's column.
    Matrix gram(k, k);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = design.row_span(i);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a; b < k; ++b) gram(a, b) += row[a] * row[b];
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);

    const std::size_t n = batch.targets.cols();
    Matrix rhs(k, n);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = design.row_span(i);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t j = 0; j < n; ++j) rhs(a, j) += row[a] * batch.targets(i, j);
    }

    VarModel model;
    model.n_sensors = n;
    model.order = batch.inputs[0].cols();
    try {
        model.coef = cholesky_solve(gram, rhs);
    } catch (const NumericError&) {
        std::cerr << "warning: var: singular design matrix, refitting with ridge lambda=1e-6\n";
        Matrix ridged = gram;
        for (std::size_t a = 0; a < k; ++a) ridged(a, a) += 1e-6;
        model.coef = cholesky_solve(ridged, rhs);
        model.ridge_applied = true;
    }
    return model;
}

std::vector<double> var_forecast(const VarModel& model, const Matrix& history) {
    if (history.rows() != model.n_sensors || history.cols() != model.order)
        throw ShapeError("var_forecast: history is " + std::to_string(history.rows()) + " x " +
                         std::to_string(history.cols()) + ", model expects " +
                         std::to_string(model.n_sensors) + " x " + std::to_string(model.order));
    const std::size_t n = model.n_sensors;
    const std::size_t p = model.order;
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = model.coef(0, j);
        for (std::size_t lag = 1; lag <= p; ++lag)
            for (std::size_t s = 0; s < n; ++s)
                acc += model.coef(1 + (lag - 1) * n + s, j) * history(s, p - lag);
        out[j] = acc;
    }
    return out;
}

Matrix var_forecast_batch(const VarModel& model, const WindowBatch& batch) {
    Matrix out(batch.size(), model.n_sensors);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::vector<double> f = var_forecast(model, batch.inputs[i]);
        for (std::size_t j = 0; j < f.size(); ++j) out(i, j) = f[j];
    }
    return out;
}

}  // namespace glue
