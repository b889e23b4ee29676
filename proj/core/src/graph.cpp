#include "glue/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "glue/error.hpp"
#include "glue/linalg.hpp"
#include "glue/util.hpp"

namespace glue {

Candidates full_candidates(std::size_t n) {
    Candidates c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i].reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) c[i].push_back(j);
    }
    return c;
}

Candidates load_candidates(const std::string& path, const std::vector<std::string>& sensor_names) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < sensor_names.size(); ++i) index.emplace(sensor_names[i], i);

    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    auto resolve = [&](const std::string& name, std::size_t line_no) {
        auto it = index.find(name);
        if (it == index.end())
            throw ParseError(path, static_cast<long>(line_no),
                             "unknown sensor '" + name + "' in candidate file");
        return it->second;
    };

    Candidates out = full_candidates(sensor_names.size());
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ParseError(path, static_cast<long>(line_no),
                             "expected 'dst_sensor: src, src, ...'");
        const std::size_t dst = resolve(trim(line.substr(0, colon)), line_no);
        std::vector<std::size_t> srcs;
        std::istringstream rest(line.substr(colon + 1));
        std::string tok;
        while (std::getline(rest, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            const std::size_t src = resolve(tok, line_no);
            if (src == dst)
                throw ParseError(path, static_cast<long>(line_no),
                                 "sensor '" + tok + "' cannot be its own candidate");
            srcs.push_back(src);
        }
        if (srcs.empty())
            throw ParseError(path, static_cast<long>(line_no),
                             "empty candidate list for '" + sensor_names[dst] + "'");
        std::sort(srcs.begin(), srcs.end());
        srcs.erase(std::unique(srcs.begin(), srcs.end()), srcs.end());
        out[dst] = std::move(srcs);
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ShapeError("cosine_similarity: incompatible shapes " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine_similarity: zero-norm embedding");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

const std::vector<std::size_t>& Adjacency::neighbors(std::size_t i) const {
    if (i >= inbound_.size())
        throw ShapeError("adjacency: node " + std::to_string(i) + " out of range " +
                         std::to_string(inbound_.size()));
    return inbound_[i];
}

bool Adjacency::has_edge(std::size_t src, std::size_t dst) const {
    const auto& nb = neighbors(dst);
    return std::binary_search(nb.begin(), nb.end(), src);
}

std::size_t Adjacency::edge_count() const {
    std::size_t total = 0;
    for (const auto& nb : inbound_) total += nb.size();
    return total;
}

void Adjacency::set_neighbors(std::size_t i, std::vector<std::size_t> sorted_src) {
    if (i >= inbound_.size())
        throw ShapeError("adjacency: node " + std::to_string(i) + " out of range " +
                         std::to_string(inbound_.size()));
    inbound_[i] = std::move(sorted_src);
}

Adjacency build_adjacency(const Matrix& embeddings, std::size_t k, const Candidates& candidates) {
    const std::size_t n = embeddings.rows();
    if (k < 1) throw ConfigError("build_adjacency: k must be >= 1");
    if (embeddings.cols() < 1) throw ShapeError("build_adjacency: embedding dimension must be >= 1");
    if (candidates.size() != n)
        throw ShapeError("build_adjacency: " + std::to_string(candidates.size()) +
                         " candidate sets for " + std::to_string(n) + " sensors");

    for (std::size_t i = 0; i < n; ++i)
        if (squared_norm(embeddings.row_span(i)) == 0.0)
            throw NumericError("build_adjacency: sensor " + std::to_string(i) +
                               " has a zero-norm embedding");

    Adjacency adj(n);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cand = candidates[i];
        if (cand.empty())
            throw ConfigError("build_adjacency: empty candidate set for sensor " +
                              std::to_string(i));
        scored.clear();
        scored.reserve(cand.size());
        for (std::size_t j : cand) {
            if (j >= n || j == i)
                throw ConfigError("build_adjacency: invalid candidate " + std::to_string(j) +
                                  " for sensor " + std::to_string(i));
            scored.emplace_back(cosine_similarity(embeddings.row_span(i), embeddings.row_span(j)),
                                j);
        }
        const std::size_t keep = std::min(k, scored.size());
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        std::vector<std::size_t> nb;
        nb.reserve(keep);
        for (std::size_t r = 0; r < keep; ++r) nb.push_back(scored[r].second);
        std::sort(nb.begin(), nb.end());
        adj.set_neighbors(i, std::move(nb));
    }
    return adj;
}

Adjacency build_adjacency(const Matrix& embeddings, std::size_t k) {
    return build_adjacency(embeddings, k, full_candidates(embeddings.rows()));
}

void export_embeddings(const Matrix& embeddings, const std::vector<std::string>& sensor_names,
                       const std::string& csv_path, const std::string& projection_path) {
    const std::size_t n = embeddings.rows(), d = embeddings.cols();
    if (sensor_names.size() != n)
        throw ShapeError("export_embeddings: " + std::to_string(sensor_names.size()) +
                         " names for " + std::to_string(n) + " embeddings");

    std::string csv = "sensor";
    for (std::size_t j = 0; j < d; ++j) csv += ",e" + std::to_string(j);
    csv += "\n";
    for (std::size_t i = 0; i < n; ++i) {
        csv += sensor_names[i];
        for (std::size_t j = 0; j < d; ++j) csv += "," + format_double(embeddings(i, j));
        csv += "\n";
    }
    write_text_file(csv_path, csv);

    // 2-component PCA of the embedding rows.
    const Matrix mean = column_means(embeddings);
    const SymEigen eig = sym_eigen(covariance(embeddings));
    std::string proj = "sensor,x,y\n";
    for (std::size_t i = 0; i < n; ++i) {
        double x = 0.0, y = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = embeddings(i, j) - mean(0, j);
            x += c * eig.vectors(j, 0);
            if (d > 1) y += c * eig.vectors(j, 1);
        }
        proj += sensor_names[i] + "," + format_double(x) + "," + format_double(y) + "\n";
    }
    write_text_file(projection_path, proj);
}

void export_graph(const Matrix& embeddings, const Adjacency& adj,
                  const std::vector<std::string>& sensor_names, const std::string& path) {
    if (sensor_names.size() != adj.n() || embeddings.rows() != adj.n())
        throw ShapeError("export_graph: inconsistent sensor count");
    std::string out = "src,dst,score\n";
    for (std::size_t i = 0; i < adj.n(); ++i) {
        for (std::size_t j : adj.neighbors(i)) {
            const double score =
                cosine_similarity(embeddings.row_span(i), embeddings.row_span(j));
            out += sensor_names[j] + "," + sensor_names[i] + "," + format_double(score) + "\n";
        }
    }
    write_text_file(path, out);
}

}  // namespace glue
