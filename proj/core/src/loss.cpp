#include "glue/loss.hpp"

#include <cmath>
#include <vector>

#include "glue/error.hpp"
#include "glue/util.hpp"

namespace glue {

double gaussian_nll(const Matrix& mu, const Matrix& sigma2, const Matrix& y) {
    if (!mu.same_shape(sigma2) || !mu.same_shape(y))
        throw ShapeError("gaussian_nll: incompatible shapes " + std::to_string(mu.rows()) + "x" +
                         std::to_string(mu.cols()) + ", " + std::to_string(sigma2.rows()) + "x" +
                         std::to_string(sigma2.cols()) + ", " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()));
    if (mu.rows() == 0) throw ShapeError("gaussian_nll: empty batch");
    if (!all_finite(mu) || !all_finite(sigma2) || !all_finite(y))
        throw NumericError("gaussian_nll: non-finite input");
    double total = 0.0;
    for (std::size_t r = 0; r < mu.rows(); ++r) {
        for (std::size_t c = 0; c < mu.cols(); ++c) {
            const double s2 = sigma2(r, c);
            if (!(s2 > 0.0)) throw NumericError("gaussian_nll: sigma2 must be positive");
            const double d = y(r, c) - mu(r, c);
            total += 0.5 * std::log(s2) + d * d / (2.0 * s2);
        }
    }
    return total / static_cast<double>(mu.rows());
}

double mse_loss(const Matrix& point, const Matrix& y) {
    if (!point.same_shape(y))
        throw ShapeError("mse_loss: incompatible shapes " + std::to_string(point.rows()) + "x" +
                         std::to_string(point.cols()) + " and " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()));
    if (point.size() == 0) throw ShapeError("mse_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double d = y[i] - point[i];
        total += d * d;
    }
    return total / static_cast<double>(point.size());
}

namespace {

// diff_i = y_i - mu_i as a tape node, given y as a constant leaf.
NodeId diff_node(Tape& t, NodeId mu, double y, NodeId minus_one) {
    return t.add(t.leaf(Matrix::scalar(y)), t.mul(mu, minus_one));
}

}  // namespace

NodeId attach_gaussian_nll(ElementGraph& g, std::span<const double> y) {
    if (g.sigma2.empty())
        throw ConfigError("attach_gaussian_nll: element graph was built in point mode");
    if (y.size() != g.mu.size())
        throw ShapeError("attach_gaussian_nll: " + std::to_string(y.size()) + " targets for " +
                         std::to_string(g.mu.size()) + " sensors");
    Tape& t = g.tape;
    const NodeId half = t.leaf(Matrix::scalar(0.5));
    const NodeId minus_one = t.leaf(Matrix::scalar(-1.0));
    std::vector<NodeId> terms;
    terms.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const NodeId inv_s2 = t.exp(t.mul(g.log_sigma2[i], minus_one));
        const NodeId quad = t.mul(t.mul(t.square(diff_node(t, g.mu[i], y[i], minus_one)), inv_s2),
                                  half);
        terms.push_back(t.add(t.mul(g.log_sigma2[i], half), quad));
    }
    return t.reduce_sum(t.concat(terms, 0));
}

NodeId attach_mse(ElementGraph& g, std::span<const double> y) {
    if (y.size() != g.mu.size())
        throw ShapeError("attach_mse: " + std::to_string(y.size()) + " targets for " +
                         std::to_string(g.mu.size()) + " sensors");
    Tape& t = g.tape;
    const NodeId minus_one = t.leaf(Matrix::scalar(-1.0));
    std::vector<NodeId> terms;
    terms.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        terms.push_back(t.square(diff_node(t, g.mu[i], y[i], minus_one)));
    return t.reduce_sum(t.concat(terms, 0));
}

namespace {

struct ElementResult {
    double loss_sum = 0.0;  // per-element loss root value (sum over sensors)
    std::vector<Matrix> grads;  // one entry per parameter block, block order
};

double run_batch(const GlueParams& params, const Adjacency& adj, const WindowBatch& batch,
                 ParamSet* grads, unsigned threads) {
    params.validate();
    if (batch.size() == 0) throw ShapeError("batch_loss: empty batch");
    const bool gaussian = params.head_mode == HeadMode::gaussian;
    const std::size_t b = batch.size();
    const std::size_t n_blocks = params.blocks.size();

    std::vector<ElementResult> results(b);
    parallel_for(b, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            ElementGraph g = build_element_graph(params, adj, batch.inputs[e]);
            std::vector<double> y(params.hyper.n_sensors);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = batch.targets(e, i);
            const NodeId root = gaussian ? attach_gaussian_nll(g, y) : attach_mse(g, y);
            results[e].loss_sum = g.tape.scalar_value(root);
            if (grads) {
                auto all = g.tape.backward(root);
                results[e].grads.reserve(n_blocks);
                for (const auto& [name, leaf] : g.param_leaves)
                    results[e].grads.push_back(std::move(all.at(leaf)));
            }
        }
    });

    // Batch-mean scale: NLL averages over elements; MSE also over sensors.
    const double scale =
        1.0 / (static_cast<double>(b) *
               (gaussian ? 1.0 : static_cast<double>(params.hyper.n_sensors)));
    double loss = 0.0;
    for (const ElementResult& r : results) loss += r.loss_sum;
    loss *= scale;

    if (grads) {
        if (grads->size() != n_blocks)
            throw ShapeError("batch gradients: expected " + std::to_string(n_blocks) + " blocks");
        for (std::size_t e = 0; e < b; ++e)  // fixed order: bitwise deterministic
            for (std::size_t k = 0; k < n_blocks; ++k) {
                Matrix& acc = (*grads)[k].value;
                const Matrix& g = results[e].grads[k];
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
            }
        for (std::size_t k = 0; k < n_blocks; ++k) {
            Matrix& acc = (*grads)[k].value;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= scale;
        }
    }
    return loss;
}

}  // namespace

double batch_loss_and_grad(const GlueParams& params, const Adjacency& adj,
                           const WindowBatch& batch, ParamSet& grads, unsigned threads) {
    return run_batch(params, adj, batch, &grads, threads);
}

double batch_loss(const GlueParams& params, const Adjacency& adj, const WindowBatch& batch,
                  unsigned threads) {
    return run_batch(params, adj, batch, nullptr, threads);
}

}  // namespace glue
