#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glue/dataset.hpp"
#include "glue/graph.hpp"
#include "glue/model.hpp"

namespace glue {

// When the dependency graph is rebuilt from the current embeddings.
enum class AdjacencyRefresh { per_epoch, per_step, once };

std::string to_string(AdjacencyRefresh r);
AdjacencyRefresh adjacency_refresh_from_string(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 25;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    HeadMode head_mode = HeadMode::gaussian;
    AdjacencyRefresh refresh = AdjacencyRefresh::per_epoch;
    bool shuffle = true;
    double grad_clip = 5.0;  // global-norm ceiling; <= 0 disables clipping
    unsigned threads = 1;

    void validate() const;
};

struct TrainReport {
    std::vector<double> epoch_loss;     // mean loss per window, one per epoch
    std::vector<double> epoch_seconds;  // wall clock, in-memory only
    std::string checkpoint_path;        // filled in by the caller on save
};

struct TrainedModel {
    GlueParams params;
    Adjacency adjacency;  // snapshot rebuilt from the final embeddings
    TrainReport report;
};

// Runs the full seeded loop: init -> (shuffle, refresh, forward/backward,
// clip, Adam) x epochs. Deterministic: fixed (data, hyper, config) reproduce
// parameters and loss history bitwise, for any thread count. Throws
// NumericError with epoch/step context if the loss turns non-finite.
TrainedModel train(const TimeSeriesDataset& data, const ModelHyper& hyper,
                   const TrainConfig& cfg, const Candidates* candidates = nullptr);

// Loss history as a two-column file: epoch index and mean loss.
void write_loss_history(const TrainReport& report, const std::string& path);

}  // namespace glue
