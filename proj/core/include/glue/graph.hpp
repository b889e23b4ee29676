#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

// Per-node candidate sets: candidates[i] lists the sensors allowed to feed
// node i's prediction, ascending, never containing i itself.
using Candidates = std::vector<std::vector<std::size_t>>;

// The unrestricted default: every other sensor is a candidate.
Candidates full_candidates(std::size_t n);

// Reads a candidate restriction file: one line per node,
// `dst_sensor: src_a, src_b, ...`; '#' starts a comment. Sensors not listed
// keep the full candidate set.
Candidates load_candidates(const std::string& path, const std::vector<std::string>& sensor_names);

// e_ji for a pair of embeddings; throws NumericError on a zero-norm vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Directed dependency structure: edge j -> i means "sensor j's history feeds
// sensor i's prediction". Stored as per-destination inbound lists.
class Adjacency {
  public:
    Adjacency() = default;
    explicit Adjacency(std::size_t n) : inbound_(n) {}

    std::size_t n() const { return inbound_.size(); }
    // Ascending inbound neighbor indices of node i.
    const std::vector<std::size_t>& neighbors(std::size_t i) const;
    bool has_edge(std::size_t src, std::size_t dst) const;
    std::size_t edge_count() const;
    void set_neighbors(std::size_t i, std::vector<std::size_t> sorted_src);

    bool operator==(const Adjacency&) const = default;

  private:
    std::vector<std::vector<std::size_t>> inbound_;
};

// Keeps, for every node i, the k candidates with the largest cosine
// similarity to v_i (ties: lower sensor index). Throws on zero-norm
// embeddings, k < 1, or an empty candidate set.
Adjacency build_adjacency(const Matrix& embeddings, std::size_t k, const Candidates& candidates);
Adjacency build_adjacency(const Matrix& embeddings, std::size_t k);

// Artifact exports. Embeddings go to `csv_path` (sensor_name + d columns)
// and a 2-component PCA projection to `projection_path` (sensor_name, x, y).
void export_embeddings(const Matrix& embeddings, const std::vector<std::string>& sensor_names,
                       const std::string& csv_path, const std::string& projection_path);

// Edge list with cosine scores: header + one `src,dst,score` line per edge.
void export_graph(const Matrix& embeddings, const Adjacency& adj,
                  const std::vector<std::string>& sensor_names, const std::string& path);

}  // namespace glue
