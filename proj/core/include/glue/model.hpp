#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glue/adam.hpp"
#include "glue/dataset.hpp"
#include "glue/graph.hpp"
#include "glue/matrix.hpp"
#include "glue/rng.hpp"
#include "glue/tape.hpp"

namespace glue {

// gaussian: heteroscedastic (mu, sigma^2) head trained by NLL.
// point: mu-only head trained by MSE (the point-forecast variant).
enum class HeadMode { gaussian, point };

std::string to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& s);

struct ModelHyper {
    std::size_t n_sensors = 0;  // N
    std::size_t embed_dim = 64; // d
    std::size_t window = 5;     // w
    std::size_t top_k = 15;     // k, neighbors kept per sensor
    double leaky_slope = 0.2;
    double sigma_floor = 1e-6;
    bool per_node_attention = false;  // one attention vector per sensor
    std::size_t head_hidden = 1;      // hidden layers in the output head

    void validate() const;
};

// All trainable state, stored as named blocks so the optimizer, gradient
// checks and checkpoints can address them uniformly:
//   "V" (N x d)  sensor embeddings
//   "W" (d x w)  shared input projection
//   "a" (4d x 1, or N x 4d per-node) attention vector
//   "head.h<l>.W" (d x d), "head.h<l>.b" (d x 1) hidden layers
//   "head.mu.W" (1 x d), "head.mu.b" (1 x 1)
//   "head.s.W"  (1 x d), "head.s.b"  (1 x 1)   gaussian mode only
struct GlueParams {
    ModelHyper hyper;
    HeadMode head_mode = HeadMode::gaussian;
    ParamSet blocks;

    const Matrix& embeddings() const { return blocks.at("V"); }
    void validate() const;
};

// Seeded initialization: every weight entry uniform(-1/sqrt(fan_in),
// +1/sqrt(fan_in)) drawn in a fixed block order, biases zero.
GlueParams init_params(const ModelHyper& hyper, HeadMode mode, Rng& rng);

// ---- Single-sensor building blocks (value level) -------------------------

// g_i = v_i ++ W x_i  (2d x 1 column).
Matrix node_feature(const Matrix& v_i, const Matrix& x_i, const Matrix& w);

// pi(i,j) = LeakyReLU(a . (g_i ++ g_j)).
double attention_score(const Matrix& g_i, const Matrix& g_j, const Matrix& a, double leaky_slope);

// Max-subtracted softmax over the self-inclusive score set.
std::vector<double> attention_weights(std::span<const double> scores);

// z_i = ReLU(sum_j alpha_j W x_j); `histories` aligns with `alpha`.
Matrix aggregate(std::span<const double> alpha, const Matrix& w,
                 const std::vector<Matrix>& histories);

struct SensorForecast {
    double mu = 0.0;
    double sigma2 = std::numeric_limits<double>::quiet_NaN();  // NaN in point mode
    bool gaussian = false;
};

// Runs the output head on v_i (*) z_i.
SensorForecast predict_distribution(const Matrix& v_i, const Matrix& z_i,
                                    const GlueParams& params);

// ---- Batched forecasts ----------------------------------------------------

struct ForecastDistribution {
    Matrix mu;      // B x N
    Matrix sigma2;  // B x N; empty in point mode

    bool gaussian() const { return !sigma2.empty(); }
    // The point forecast is the distribution mean.
    const Matrix& point() const { return mu; }
};

// Deterministic forward pass over a batch; parallel across batch elements.
ForecastDistribution forward(const GlueParams& params, const Adjacency& adj,
                             const WindowBatch& batch, unsigned threads = 1);

// ---- Differentiable per-element graph ------------------------------------

// The forward computation of one window, recorded on a private tape so that
// batch elements can run forward/backward on separate threads. `param_leaves`
// maps block names to their leaf ids for gradient extraction.
struct ElementGraph {
    Tape tape;
    std::vector<NodeId> mu;          // one node per sensor (1 x 1)
    std::vector<NodeId> sigma2;      // gaussian mode only
    std::vector<NodeId> log_sigma2;  // gaussian mode only
    std::vector<std::pair<std::string, NodeId>> param_leaves;

    NodeId leaf_of(const std::string& block) const;
};

ElementGraph build_element_graph(const GlueParams& params, const Adjacency& adj,
                                 const Matrix& window /* N x w */);

}  // namespace glue
