#include "glue/adam.hpp"

#include <cmath>

#include "glue/error.hpp"

namespace glue {

std::size_t ParamSet::add(std::string name, Matrix value) {
    if (index_.count(name)) throw Error("ParamSet: duplicate block '" + name + "'");
    index_.emplace(name, blocks_.size());
    blocks_.push_back(Block{std::move(name), std::move(value)});
    return blocks_.size() - 1;
}

Matrix& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("ParamSet: no block '" + name + "'");
    return blocks_[it->second].value;
}

const Matrix& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("ParamSet: no block '" + name + "'");
    return blocks_[it->second].value;
}

std::size_t ParamSet::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("ParamSet: no block '" + name + "'");
    return it->second;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet z;
    for (const Block& b : blocks_) z.add(b.name, Matrix(b.value.rows(), b.value.cols()));
    return z;
}

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
    if (!(cfg.lr > 0.0)) throw ConfigError("adam: lr must be > 0");
    if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
        throw ConfigError("adam: betas must lie in (0,1)");
    if (!(cfg.eps > 0.0)) throw ConfigError("adam: eps must be > 0");
}

void Adam::step(ParamSet& params, const ParamSet& grads) {
    if (params.size() != grads.size())
        throw ShapeError("adam: parameter/gradient block count mismatch");

    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (std::size_t b = 0; b < params.size(); ++b) {
            m_.emplace_back(params[b].value.rows(), params[b].value.cols());
            v_.emplace_back(params[b].value.rows(), params[b].value.cols());
        }
    }

    for (std::size_t b = 0; b < params.size(); ++b) {
        const auto& g = grads[b];
        if (g.name != params[b].name || !g.value.same_shape(params[b].value))
            throw ShapeError("adam: block '" + params[b].name + "' layout mismatch");
        if (!all_finite(g.value))
            throw NumericError("adam: non-finite gradient in block '" + params[b].name + "'");
    }

    step_count_ += 1;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);

    for (std::size_t b = 0; b < params.size(); ++b) {
        Matrix& p = params[b].value;
        const Matrix& g = grads[b].value;
        Matrix& m = m_[b];
        Matrix& v = v_[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

}  // namespace glue
