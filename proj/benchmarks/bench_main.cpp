// Microbenchmarks for the hot paths: the per-window tape, the batched
// forward/backward, graph construction, and anomaly scoring.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "glue/graph.hpp"
#include "glue/loss.hpp"
#include "glue/matrix.hpp"
#include "glue/model.hpp"
#include "glue/rng.hpp"
#include "glue/scoring.hpp"

namespace {

using namespace glue;

struct Fixture {
    GlueParams params;
    Adjacency adj;
    WindowBatch batch;

    Fixture(std::size_t n_sensors, std::size_t batch_size, HeadMode mode) {
        ModelHyper hyper;
        hyper.n_sensors = n_sensors;
        hyper.embed_dim = 16;
        hyper.window = 5;
        hyper.top_k = std::min<std::size_t>(15, n_sensors - 1);
        Rng rng(7);
        params = init_params(hyper, mode, rng);
        adj = build_adjacency(params.embeddings(), hyper.top_k);
        batch.inputs.reserve(batch_size);
        batch.targets = Matrix(batch_size, n_sensors);
        for (std::size_t b = 0; b < batch_size; ++b) {
            Matrix window(n_sensors, hyper.window);
            for (std::size_t i = 0; i < window.size(); ++i) window[i] = rng.gaussian();
            batch.inputs.push_back(std::move(window));
            for (std::size_t j = 0; j < n_sensors; ++j) batch.targets(b, j) = rng.gaussian();
            batch.target_times.push_back(b);
        }
    }
};

void BM_ElementGraphBuild(benchmark::State& state) {
    Fixture fx(static_cast<std::size_t>(state.range(0)), 1, HeadMode::gaussian);
    for (auto _ : state) {
        ElementGraph g = build_element_graph(fx.params, fx.adj, fx.batch.inputs[0]);
        benchmark::DoNotOptimize(g.tape.value(g.mu[0])(0, 0));
    }
}
BENCHMARK(BM_ElementGraphBuild)->Arg(8)->Arg(32);

void BM_BatchLossAndGrad(benchmark::State& state) {
    const unsigned threads = static_cast<unsigned>(state.range(0));
    Fixture fx(16, 32, HeadMode::gaussian);
    ParamSet grads = fx.params.blocks.zeros_like();
    for (auto _ : state) {
        double loss = batch_loss_and_grad(fx.params, fx.adj, fx.batch, grads, threads);
        benchmark::DoNotOptimize(loss);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(fx.batch.size()));
}
BENCHMARK(BM_BatchLossAndGrad)->Arg(1)->Arg(2)->Arg(4);

void BM_Forward(benchmark::State& state) {
    Fixture fx(16, 64, HeadMode::gaussian);
    for (auto _ : state) {
        ForecastDistribution fd = forward(fx.params, fx.adj, fx.batch, 1);
        benchmark::DoNotOptimize(fd.mu(0, 0));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(fx.batch.size()));
}
BENCHMARK(BM_Forward);

void BM_BuildAdjacency(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(11);
    Matrix embeddings(n, 64);
    for (std::size_t i = 0; i < embeddings.size(); ++i) embeddings[i] = rng.gaussian();
    for (auto _ : state) {
        Adjacency adj = build_adjacency(embeddings, 15);
        benchmark::DoNotOptimize(adj.edge_count());
    }
}
BENCHMARK(BM_BuildAdjacency)->Arg(50)->Arg(100)->Arg(200);

void BM_MreSeries(benchmark::State& state) {
    const std::size_t t_len = 10000;
    const std::size_t n = 50;
    Rng rng(13);
    Matrix train_err(500, n);
    Matrix test_err(t_len, n);
    for (std::size_t i = 0; i < train_err.size(); ++i) train_err[i] = std::abs(rng.gaussian());
    for (std::size_t i = 0; i < test_err.size(); ++i) test_err[i] = std::abs(rng.gaussian());
    RobustStats stats = robust_stats(train_err);
    for (auto _ : state) {
        ScoreSeries scores = mre_series(test_err, stats);
        benchmark::DoNotOptimize(scores.value[0]);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(t_len));
}
BENCHMARK(BM_MreSeries);

}  // namespace

BENCHMARK_MAIN();
