#include "glue/train.hpp"

#include <chrono>
#include <cmath>

#include "glue/error.hpp"
#include "glue/loss.hpp"
#include "glue/rng.hpp"
#include "glue/util.hpp"

namespace glue {

std::string to_string(AdjacencyRefresh r) {
    switch (r) {
        case AdjacencyRefresh::per_epoch: return "per-epoch";
        case AdjacencyRefresh::per_step: return "per-step";
        case AdjacencyRefresh::once: return "once";
    }
    throw ConfigError("unknown adjacency refresh schedule");
}

AdjacencyRefresh adjacency_refresh_from_string(const std::string& s) {
    if (s == "per-epoch") return AdjacencyRefresh::per_epoch;
    if (s == "per-step") return AdjacencyRefresh::per_step;
    if (s == "once") return AdjacencyRefresh::once;
    throw ConfigError("unknown adjacency refresh '" + s + "' (expected per-epoch|per-step|once)");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train: learning rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw ConfigError("train: betas must lie in (0, 1)");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
}

namespace {

Adjacency snapshot_adjacency(const GlueParams& params, const Candidates* candidates) {
    const std::size_t n = params.hyper.n_sensors;
    if (n == 1) return Adjacency(1);  // a single sensor attends to itself only
    if (candidates) return build_adjacency(params.embeddings(), params.hyper.top_k, *candidates);
    return build_adjacency(params.embeddings(), params.hyper.top_k);
}

void clip_global_norm(ParamSet& grads, double ceiling) {
    if (ceiling <= 0.0) return;
    double total = 0.0;
    for (const auto& blk : grads) total += squared_norm(blk.value);
    const double norm = std::sqrt(total);
    if (norm <= ceiling) return;
    const double factor = ceiling / norm;
    for (auto& blk : grads)
        for (std::size_t i = 0; i < blk.value.size(); ++i) blk.value[i] *= factor;
}

}  // namespace

TrainedModel train(const TimeSeriesDataset& data, const ModelHyper& hyper,
                   const TrainConfig& cfg, const Candidates* candidates) {
    cfg.validate();
    hyper.validate();
    if (hyper.n_sensors != data.n_sensors())
        throw ConfigError("train: model configured for " + std::to_string(hyper.n_sensors) +
                          " sensors but the dataset has " + std::to_string(data.n_sensors()));
    if (candidates && candidates->size() != hyper.n_sensors)
        throw ConfigError("train: candidate sets do not match the sensor count");

    const WindowSet windows = make_windows(data, hyper.window);
    Rng rng(cfg.seed);
    GlueParams params = init_params(hyper, cfg.head_mode, rng);
    Adjacency adj = snapshot_adjacency(params, candidates);

    Adam optimizer(AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
    TrainedModel out;
    out.report.epoch_loss.reserve(cfg.epochs);
    out.report.epoch_seconds.reserve(cfg.epochs);

    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (cfg.refresh == AdjacencyRefresh::per_epoch)
            adj = snapshot_adjacency(params, candidates);
        if (cfg.shuffle) order = rng.permutation(windows.size());

        double loss_sum = 0.0;
        std::size_t window_count = 0;
        std::size_t step = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            // A single-element remainder is dropped; a deliberate batch_size
            // of 1 is honored.
            if (end - begin == 1 && cfg.batch_size > 1) continue;
            ++step;
            if (cfg.refresh == AdjacencyRefresh::per_step)
                adj = snapshot_adjacency(params, candidates);

            const WindowBatch batch =
                windows.gather(std::span<const std::size_t>(order).subspan(begin, end - begin));
            ParamSet grads = params.blocks.zeros_like();
            const double loss = batch_loss_and_grad(params, adj, batch, grads, cfg.threads);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", step " + std::to_string(step));
            clip_global_norm(grads, cfg.grad_clip);
            optimizer.step(params.blocks, grads);

            loss_sum += loss * static_cast<double>(end - begin);
            window_count += end - begin;
        }
        if (window_count == 0)
            throw ConfigError("train: no usable batch (a lone window cannot fill a batch)");
        out.report.epoch_loss.push_back(loss_sum / static_cast<double>(window_count));
        out.report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    out.params = std::move(params);
    out.adjacency = snapshot_adjacency(out.params, candidates);
    return out;
}

void write_loss_history(const TrainReport& report, const std::string& path) {
    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < report.epoch_loss.size(); ++i)
        csv += std::to_string(i + 1) + "," + format_double(report.epoch_loss[i]) + "\n";
    write_text_file(path, csv);
}

}  // namespace glue
