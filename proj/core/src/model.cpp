#include "glue/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "glue/error.hpp"
#include "glue/util.hpp"

namespace glue {

namespace {

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const std::string& what, const Matrix& m, std::size_t rows, std::size_t cols) {
    if (m.rows() != rows || m.cols() != cols)
        throw ShapeError(what + ": got " + shape_str(m) + ", expected " + std::to_string(rows) +
                         "x" + std::to_string(cols));
}

}  // namespace

std::string to_string(HeadMode mode) {
    return mode == HeadMode::gaussian ? "gaussian" : "point";
}

HeadMode head_mode_from_string(const std::string& s) {
    if (s == "gaussian") return HeadMode::gaussian;
    if (s == "point") return HeadMode::point;
    throw ConfigError("unknown head mode '" + s + "' (expected gaussian|point)");
}

void ModelHyper::validate() const {
    if (n_sensors < 1) throw ConfigError("model: n_sensors must be >= 1");
    if (embed_dim < 1) throw ConfigError("model: embed_dim must be >= 1");
    if (window < 1) throw ConfigError("model: window must be >= 1");
    if (top_k < 1) throw ConfigError("model: top_k must be >= 1");
    if (!(sigma_floor > 0.0)) throw ConfigError("model: sigma_floor must be > 0");
    if (!(leaky_slope >= 0.0) || leaky_slope >= 1.0)
        throw ConfigError("model: leaky_slope must lie in [0, 1)");
}

void GlueParams::validate() const {
    hyper.validate();
    const std::size_t n = hyper.n_sensors, d = hyper.embed_dim;
    std::size_t expected = 0;
    auto check = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        if (!blocks.has(name)) throw ShapeError("model: missing parameter block '" + name + "'");
        expect_shape("model block '" + name + "'", blocks.at(name), rows, cols);
        ++expected;
    };
    check("V", n, d);
    check("W", d, hyper.window);
    if (hyper.per_node_attention)
        check("a", n, 4 * d);
    else
        check("a", 4 * d, 1);
    for (std::size_t l = 0; l < hyper.head_hidden; ++l) {
        const std::string base = "head.h" + std::to_string(l) + ".";
        check(base + "W", d, d);
        check(base + "b", d, 1);
    }
    check("head.mu.W", 1, d);
    check("head.mu.b", 1, 1);
    if (head_mode == HeadMode::gaussian) {
        check("head.s.W", 1, d);
        check("head.s.b", 1, 1);
    }
    if (blocks.size() != expected)
        throw ShapeError("model: parameter set has " + std::to_string(blocks.size()) +
                         " blocks, expected " + std::to_string(expected));
}

GlueParams init_params(const ModelHyper& hyper, HeadMode mode, Rng& rng) {
    hyper.validate();
    const std::size_t n = hyper.n_sensors, d = hyper.embed_dim;

    auto uniform_block = [&](std::size_t rows, std::size_t cols, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-bound, bound);
        return m;
    };

    GlueParams p;
    p.hyper = hyper;
    p.head_mode = mode;
    p.blocks.add("V", uniform_block(n, d, d));
    p.blocks.add("W", uniform_block(d, hyper.window, hyper.window));
    if (hyper.per_node_attention)
        p.blocks.add("a", uniform_block(n, 4 * d, 4 * d));
    else
        p.blocks.add("a", uniform_block(4 * d, 1, 4 * d));
    for (std::size_t l = 0; l < hyper.head_hidden; ++l) {
        const std::string base = "head.h" + std::to_string(l) + ".";
        p.blocks.add(base + "W", uniform_block(d, d, d));
        p.blocks.add(base + "b", Matrix(d, 1));
    }
    p.blocks.add("head.mu.W", uniform_block(1, d, d));
    p.blocks.add("head.mu.b", Matrix(1, 1));
    if (mode == HeadMode::gaussian) {
        p.blocks.add("head.s.W", uniform_block(1, d, d));
        p.blocks.add("head.s.b", Matrix(1, 1));
    }
    p.validate();
    return p;
}

Matrix node_feature(const Matrix& v_i, const Matrix& x_i, const Matrix& w) {
    if (v_i.cols() != 1 || x_i.cols() != 1)
        throw ShapeError("node_feature: v and x must be columns, got " + shape_str(v_i) +
                         " and " + shape_str(x_i));
    if (w.cols() != x_i.rows() || w.rows() != v_i.rows())
        throw ShapeError("node_feature: incompatible shapes " + shape_str(w) + " and " +
                         shape_str(x_i));
    const Matrix wx = matmul(w, x_i);
    Matrix g(2 * v_i.rows(), 1);
    for (std::size_t i = 0; i < v_i.rows(); ++i) g[i] = v_i[i];
    for (std::size_t i = 0; i < wx.rows(); ++i) g[v_i.rows() + i] = wx[i];
    return g;
}

double attention_score(const Matrix& g_i, const Matrix& g_j, const Matrix& a, double leaky_slope) {
    if (!g_i.same_shape(g_j) || g_i.cols() != 1)
        throw ShapeError("attention_score: features are " + shape_str(g_i) + " and " +
                         shape_str(g_j));
    if (a.cols() != 1 || a.rows() != 2 * g_i.rows())
        throw ShapeError("attention_score: vector is " + shape_str(a) + ", expected " +
                         std::to_string(2 * g_i.rows()) + "x1");
    double s = 0.0;
    for (std::size_t i = 0; i < g_i.rows(); ++i) s += a[i] * g_i[i];
    for (std::size_t i = 0; i < g_j.rows(); ++i) s += a[g_i.rows() + i] * g_j[i];
    return s >= 0.0 ? s : leaky_slope * s;
}

std::vector<double> attention_weights(std::span<const double> scores) {
    if (scores.empty()) throw ShapeError("attention_weights: empty score set");
    const double m = *std::max_element(scores.begin(), scores.end());
    std::vector<double> w(scores.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        w[i] = std::exp(scores[i] - m);
        denom += w[i];
    }
    for (double& x : w) x /= denom;
    return w;
}

Matrix aggregate(std::span<const double> alpha, const Matrix& w,
                 const std::vector<Matrix>& histories) {
    if (alpha.size() != histories.size())
        throw ShapeError("aggregate: " + std::to_string(alpha.size()) + " weights for " +
                         std::to_string(histories.size()) + " histories");
    if (histories.empty()) throw ShapeError("aggregate: empty index set");
    Matrix z(w.rows(), 1);
    for (std::size_t j = 0; j < histories.size(); ++j) {
        const Matrix wx = matmul(w, histories[j]);
        for (std::size_t i = 0; i < z.rows(); ++i) z[i] += alpha[j] * wx[i];
    }
    for (std::size_t i = 0; i < z.rows(); ++i) z[i] = std::max(z[i], 0.0);
    return z;
}

SensorForecast predict_distribution(const Matrix& v_i, const Matrix& z_i,
                                    const GlueParams& params) {
    const std::size_t d = params.hyper.embed_dim;
    expect_shape("predict_distribution: v", v_i, d, 1);
    expect_shape("predict_distribution: z", z_i, d, 1);

    Matrix h = hadamard(v_i, z_i);
    for (std::size_t l = 0; l < params.hyper.head_hidden; ++l) {
        const std::string base = "head.h" + std::to_string(l) + ".";
        h = add(matmul(params.blocks.at(base + "W"), h), params.blocks.at(base + "b"));
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::max(h[i], 0.0);
    }
    SensorForecast f;
    f.mu = matmul(params.blocks.at("head.mu.W"), h)[0] + params.blocks.at("head.mu.b")[0];
    if (params.head_mode == HeadMode::gaussian) {
        const double s =
            matmul(params.blocks.at("head.s.W"), h)[0] + params.blocks.at("head.s.b")[0];
        f.sigma2 = softplus_scalar(s) + params.hyper.sigma_floor;
        f.gaussian = true;
    }
    return f;
}

NodeId ElementGraph::leaf_of(const std::string& block) const {
    for (const auto& [name, id] : param_leaves)
        if (name == block) return id;
    throw ConfigError("element graph has no parameter block '" + block + "'");
}

ElementGraph build_element_graph(const GlueParams& p, const Adjacency& adj,
                                 const Matrix& window) {
    const ModelHyper& h = p.hyper;
    const std::size_t n = h.n_sensors, d = h.embed_dim;
    expect_shape("forward window", window, n, h.window);
    if (adj.n() != n)
        throw ShapeError("forward: adjacency over " + std::to_string(adj.n()) +
                         " nodes for " + std::to_string(n) + " sensors");

    ElementGraph g;
    Tape& t = g.tape;
    for (const auto& blk : p.blocks) g.param_leaves.emplace_back(blk.name, t.leaf(blk.value));
    const NodeId V = g.leaf_of("V");
    const NodeId W = g.leaf_of("W");
    const NodeId A = g.leaf_of("a");
    const bool gaussian = p.head_mode == HeadMode::gaussian;
    const NodeId floor_leaf = gaussian ? t.leaf(Matrix::scalar(h.sigma_floor)) : NodeId{0};

    // Per-sensor inputs and features. Rows of V (and of a per-node attention
    // block) are selected with constant one-hot matmuls so gradients flow
    // into the shared blocks.
    std::vector<NodeId> sel(n), v(n), wx(n), gfeat(n);
    for (std::size_t i = 0; i < n; ++i) {
        Matrix onehot(1, n);
        onehot(0, i) = 1.0;
        sel[i] = t.leaf(std::move(onehot));
        v[i] = t.matmul(V, sel[i], true, true);  // d x 1
        Matrix x_i(h.window, 1);
        for (std::size_t u = 0; u < h.window; ++u) x_i[u] = window(i, u);
        wx[i] = t.matmul(W, t.leaf(std::move(x_i)));  // d x 1
        const NodeId parts[] = {v[i], wx[i]};
        gfeat[i] = t.concat(parts, 0);  // 2d x 1
    }

    g.mu.resize(n);
    if (gaussian) {
        g.sigma2.resize(n);
        g.log_sigma2.resize(n);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const NodeId a_i =
            h.per_node_attention ? t.matmul(A, sel[i], true, true) : A;  // 4d x 1

        auto score_of = [&](std::size_t j) {
            const NodeId pair[] = {gfeat[i], gfeat[j]};
            return t.leaky_relu(t.matmul(a_i, t.concat(pair, 0), true, false), h.leaky_slope);
        };

        // Self first; neighbors follow in an order derived from values, not
        // labels (score descending, then projected-history bit patterns), so
        // every reduction below is invariant under sensor relabeling.
        const std::vector<std::size_t>& nbrs = adj.neighbors(i);
        std::vector<std::pair<NodeId, std::size_t>> scored;  // (score node, sensor)
        scored.reserve(nbrs.size());
        for (std::size_t j : nbrs) scored.emplace_back(score_of(j), j);
        std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
            const double sx = t.scalar_value(x.first), sy = t.scalar_value(y.first);
            if (sx != sy) return sx > sy;
            const auto bits = [&](const auto& e) {
                std::span<const double> s = t.value(wx[e.second]).data();
                std::vector<std::uint64_t> b(s.size());
                for (std::size_t q = 0; q < s.size(); ++q) b[q] = std::bit_cast<std::uint64_t>(s[q]);
                return b;
            };
            return bits(x) < bits(y);
        });

        std::vector<NodeId> scores{score_of(i)};
        std::vector<NodeId> feats{wx[i]};
        for (const auto& [score, j] : scored) {
            scores.push_back(score);
            feats.push_back(wx[j]);
        }
        const NodeId alpha = t.softmax_row(t.concat(scores, 1));       // 1 x (m+1)
        const NodeId pooled = t.matmul(t.concat(feats, 1), alpha, false, true);  // d x 1
        const NodeId z = t.relu(pooled);

        NodeId hcur = t.mul(v[i], z);
        for (std::size_t l = 0; l < h.head_hidden; ++l) {
            const std::string base = "head.h" + std::to_string(l) + ".";
            hcur = t.relu(t.add(t.matmul(g.leaf_of(base + "W"), hcur), g.leaf_of(base + "b")));
        }
        g.mu[i] = t.add(t.matmul(g.leaf_of("head.mu.W"), hcur), g.leaf_of("head.mu.b"));
        if (gaussian) {
            const NodeId s =
                t.add(t.matmul(g.leaf_of("head.s.W"), hcur), g.leaf_of("head.s.b"));
            g.sigma2[i] = t.add(t.softplus(s), floor_leaf);
            g.log_sigma2[i] = t.log(g.sigma2[i]);
        }
    }
    return g;
}

ForecastDistribution forward(const GlueParams& params, const Adjacency& adj,
                             const WindowBatch& batch, unsigned threads) {
    params.validate();
    const std::size_t b = batch.size(), n = params.hyper.n_sensors;
    ForecastDistribution out;
    out.mu = Matrix(b, n);
    if (params.head_mode == HeadMode::gaussian) out.sigma2 = Matrix(b, n);

    parallel_for(b, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            const ElementGraph g = build_element_graph(params, adj, batch.inputs[e]);
            for (std::size_t i = 0; i < n; ++i) {
                out.mu(e, i) = g.tape.scalar_value(g.mu[i]);
                if (!out.sigma2.empty()) out.sigma2(e, i) = g.tape.scalar_value(g.sigma2[i]);
            }
        }
    });
    return out;
}

}  // namespace glue
