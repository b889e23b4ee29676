#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

/// Ordered, name-addressable set of parameter (or gradient) blocks.
/// Block order is the insertion order and is part of the deterministic
/// update/serialization contract.
class ParamSet {
public:
    struct Block {
        std::string name;
        Matrix value;
    };

    std::size_t add(std::string name, Matrix value);

    bool has(const std::string& name) const { return index_.count(name) != 0; }
    Matrix& at(const std::string& name);
    const Matrix& at(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;

    std::size_t size() const { return blocks_.size(); }
    Block& operator[](std::size_t i) { return blocks_[i]; }
    const Block& operator[](std::size_t i) const { return blocks_[i]; }

    /// A zero-filled copy with the same block names and shapes.
    ParamSet zeros_like() const;

    auto begin() { return blocks_.begin(); }
    auto end() { return blocks_.end(); }
    auto begin() const { return blocks_.begin(); }
    auto end() const { return blocks_.end(); }

private:
    std::vector<Block> blocks_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

/// Bias-corrected Adam over named parameter blocks. First- and second-moment
/// estimates are laid out per block and must match the parameter shapes;
/// step_count increases by exactly one per update.
class Adam {
public:
    explicit Adam(AdamConfig cfg);

    /// Applies one update. `grads` must have the same block names/shapes as
    /// `params` (in the same order). Throws NumericError naming the block on
    /// NaN/Inf gradients, ShapeError on layout mismatch.
    void step(ParamSet& params, const ParamSet& grads);

    std::uint64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::uint64_t step_count_ = 0;
};

}  // namespace glue
