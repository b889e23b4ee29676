#include "glue/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glue/error.hpp"

namespace glue {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void fail_shape(Op op, const std::string& detail) {
    throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

bool broadcast_compatible(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) || a.is_scalar() || b.is_scalar();
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::mul: return "elementwise-mul";
        case Op::concat: return "concat";
        case Op::leaky_relu: return "LeakyReLU";
        case Op::relu: return "ReLU";
        case Op::softplus: return "softplus";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::square: return "square";
        case Op::reduce_sum: return "reduce-sum";
        case Op::softmax_row: return "softmax-row";
    }
    return "?";
}

NodeId Tape::leaf(Matrix value) {
    if (value.empty()) throw ShapeError("leaf: empty value");
    nodes_.push_back(Node{Op::leaf, {}, {}, std::move(value)});
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::record(Op op, std::span<const NodeId> inputs, OpAttrs attrs) {
    if (op == Op::leaf) throw Error("record: use leaf() to add leaves");
    for (NodeId id : inputs) {
        if (id >= nodes_.size())
            throw Error(std::string(op_name(op)) + ": input node " + std::to_string(id) +
                        " is not on the tape");
    }
    Node n{op, attrs, std::vector<NodeId>(inputs.begin(), inputs.end()), {}};
    n.value = eval(n);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Matrix Tape::eval(const Node& n) const {
    const auto arity = [&](std::size_t want) {
        if (n.inputs.size() != want)
            fail_shape(n.op, "expects " + std::to_string(want) + " inputs, got " +
                                 std::to_string(n.inputs.size()));
    };
    const auto in = [&](std::size_t i) -> const Matrix& { return nodes_[n.inputs[i]].value; };

    switch (n.op) {
        case Op::leaf:
            return n.value;

        case Op::matmul: {
            arity(2);
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            const std::size_t ka = n.attrs.trans_a ? a.rows() : a.cols();
            const std::size_t kb = n.attrs.trans_b ? b.cols() : b.rows();
            if (ka != kb)
                fail_shape(n.op, "inner dimensions " + shape_str(a) + " * " + shape_str(b) +
                                     (n.attrs.trans_a ? " (A transposed)" : "") +
                                     (n.attrs.trans_b ? " (B transposed)" : ""));
            return glue::matmul(a, b, n.attrs.trans_a, n.attrs.trans_b);
        }

        case Op::add: {
            arity(2);
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            if (!broadcast_compatible(a, b))
                fail_shape(n.op, shape_str(a) + " vs " + shape_str(b));
            if (a.is_scalar() && !b.is_scalar()) {
                Matrix c = b;
                for (std::size_t i = 0; i < c.size(); ++i) c[i] += a[0];
                return c;
            }
            if (b.is_scalar() && !a.is_scalar()) {
                Matrix c = a;
                for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[0];
                return c;
            }
            return glue::add(a, b);
        }

        case Op::mul: {
            arity(2);
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            if (!broadcast_compatible(a, b))
                fail_shape(n.op, shape_str(a) + " vs " + shape_str(b));
            if (a.is_scalar() && !b.is_scalar()) return scale(b, a[0]);
            if (b.is_scalar() && !a.is_scalar()) return scale(a, b[0]);
            return hadamard(a, b);
        }

        case Op::concat: {
            if (n.inputs.empty()) fail_shape(n.op, "needs at least one input");
            const int axis = n.attrs.axis;
            if (axis != 0 && axis != 1) fail_shape(n.op, "axis must be 0 or 1");
            std::size_t rows = 0, cols = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const Matrix& m = in(i);
                if (i == 0) {
                    rows = m.rows();
                    cols = m.cols();
                } else if (axis == 0 && m.cols() != cols) {
                    fail_shape(n.op, "column count mismatch: " + shape_str(in(0)) + " vs " +
                                         shape_str(m));
                } else if (axis == 1 && m.rows() != rows) {
                    fail_shape(n.op,
                               "row count mismatch: " + shape_str(in(0)) + " vs " + shape_str(m));
                }
                if (i > 0) {
                    if (axis == 0)
                        rows += m.rows();
                    else
                        cols += m.cols();
                }
            }
            Matrix c(rows, cols);
            if (axis == 0) {
                std::size_t r0 = 0;
                for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                    const Matrix& m = in(i);
                    for (std::size_t r = 0; r < m.rows(); ++r)
                        for (std::size_t j = 0; j < m.cols(); ++j) c(r0 + r, j) = m(r, j);
                    r0 += m.rows();
                }
            } else {
                std::size_t c0 = 0;
                for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                    const Matrix& m = in(i);
                    for (std::size_t r = 0; r < m.rows(); ++r)
                        for (std::size_t j = 0; j < m.cols(); ++j) c(r, c0 + j) = m(r, j);
                    c0 += m.cols();
                }
            }
            return c;
        }

        case Op::leaky_relu: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t i = 0; i < c.size(); ++i)
                if (c[i] < 0.0) c[i] *= n.attrs.slope;
            return c;
        }

        case Op::relu: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t i = 0; i < c.size(); ++i)
                if (c[i] < 0.0) c[i] = 0.0;
            return c;
        }

        case Op::softplus: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t i = 0; i < c.size(); ++i)
                c[i] = std::log1p(std::exp(-std::abs(c[i]))) + std::max(c[i], 0.0);
            return c;
        }

        case Op::exp: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::exp(c[i]);
            return c;
        }

        case Op::log: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::log(c[i]);
            return c;
        }

        case Op::square: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t i = 0; i < c.size(); ++i) c[i] *= c[i];
            return c;
        }

        case Op::reduce_sum: {
            arity(1);
            return Matrix::scalar(sum(in(0)));
        }

        case Op::softmax_row: {
            arity(1);
            Matrix c = in(0);
            for (std::size_t r = 0; r < c.rows(); ++r) {
                auto row = c.row_span(r);
                const double mx = *std::max_element(row.begin(), row.end());
                double total = 0.0;
                for (double& x : row) {
                    x = std::exp(x - mx);
                    total += x;
                }
                for (double& x : row) x /= total;
            }
            return c;
        }
    }
    throw Error("eval: unknown op");
}

std::unordered_map<NodeId, Matrix> Tape::backward(NodeId root) const {
    if (root >= nodes_.size()) throw Error("backward: root not on the tape");
    if (!nodes_[root].value.is_scalar())
        throw ShapeError("backward: root must be scalar, got " + shape_str(nodes_[root].value));

    std::vector<Matrix> adjoint(nodes_.size());
    adjoint[root] = Matrix::scalar(1.0);

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const NodeId id = static_cast<NodeId>(i);
        if (adjoint[id].empty() || nodes_[id].op == Op::leaf) continue;
        accumulate(adjoint, nodes_[id], id);
    }

    std::unordered_map<NodeId, Matrix> grads;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].op != Op::leaf) continue;
        const NodeId id = static_cast<NodeId>(i);
        if (adjoint[id].empty())
            grads.emplace(id, Matrix(nodes_[i].value.rows(), nodes_[i].value.cols()));
        else
            grads.emplace(id, std::move(adjoint[id]));
    }
    return grads;
}

void Tape::accumulate(std::vector<Matrix>& adjoint, const Node& n, NodeId id) const {
    const Matrix& g = adjoint[id];
    const auto in = [&](std::size_t i) -> const Matrix& { return nodes_[n.inputs[i]].value; };
    const auto bump = [&](std::size_t i, const Matrix& delta) {
        Matrix& slot = adjoint[n.inputs[i]];
        if (slot.empty())
            slot = delta;
        else
            for (std::size_t k = 0; k < slot.size(); ++k) slot[k] += delta[k];
    };
    // For a broadcast scalar operand the adjoint is the sum of the elementwise
    // contributions.
    const auto bump_broadcast = [&](std::size_t i, const Matrix& contributions) {
        if (in(i).is_scalar() && !contributions.is_scalar())
            bump(i, Matrix::scalar(sum(contributions)));
        else
            bump(i, contributions);
    };

    switch (n.op) {
        case Op::leaf:
            return;

        case Op::matmul: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            const bool ta = n.attrs.trans_a, tb = n.attrs.trans_b;
            if (!ta && !tb) {
                bump(0, glue::matmul(g, b, false, true));
                bump(1, glue::matmul(a, g, true, false));
            } else if (ta && !tb) {
                bump(0, glue::matmul(b, g, false, true));
                bump(1, glue::matmul(a, g, false, false));
            } else if (!ta && tb) {
                bump(0, glue::matmul(g, b, false, false));
                bump(1, glue::matmul(g, a, true, false));
            } else {
                bump(0, glue::matmul(b, g, true, true));
                bump(1, glue::matmul(g, a, true, true));
            }
            return;
        }

        case Op::add: {
            bump_broadcast(0, g);
            bump_broadcast(1, g);
            return;
        }

        case Op::mul: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            const auto side = [&](const Matrix& other) {
                if (other.is_scalar() && !g.is_scalar()) return scale(g, other[0]);
                if (!other.is_scalar() && g.is_scalar()) return scale(other, g[0]);
                return hadamard(g, other);
            };
            bump_broadcast(0, side(b));
            bump_broadcast(1, side(a));
            return;
        }

        case Op::concat: {
            const int axis = n.attrs.axis;
            std::size_t offset = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const Matrix& m = in(i);
                Matrix part(m.rows(), m.cols());
                for (std::size_t r = 0; r < m.rows(); ++r)
                    for (std::size_t c = 0; c < m.cols(); ++c)
                        part(r, c) = axis == 0 ? g(offset + r, c) : g(r, offset + c);
                offset += axis == 0 ? m.rows() : m.cols();
                bump(i, part);
            }
            return;
        }

        case Op::leaky_relu: {
            const Matrix& x = in(0);
            Matrix d = g;
            for (std::size_t i = 0; i < d.size(); ++i)
                if (x[i] < 0.0) d[i] *= n.attrs.slope;
            bump(0, d);
            return;
        }

        case Op::relu: {
            const Matrix& x = in(0);
            Matrix d = g;
            for (std::size_t i = 0; i < d.size(); ++i)
                if (x[i] < 0.0) d[i] = 0.0;
            bump(0, d);
            return;
        }

        case Op::softplus: {
            const Matrix& x = in(0);
            Matrix d = g;
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= sigmoid(x[i]);
            bump(0, d);
            return;
        }

        case Op::exp: {
            Matrix d = hadamard(g, n.value);
            bump(0, d);
            return;
        }

        case Op::log: {
            const Matrix& x = in(0);
            Matrix d = g;
            for (std::size_t i = 0; i < d.size(); ++i) d[i] /= x[i];
            bump(0, d);
            return;
        }

        case Op::square: {
            const Matrix& x = in(0);
            Matrix d = g;
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 2.0 * x[i];
            bump(0, d);
            return;
        }

        case Op::reduce_sum: {
            const Matrix& x = in(0);
            bump(0, Matrix(x.rows(), x.cols(), g[0]));
            return;
        }

        case Op::softmax_row: {
            const Matrix& y = n.value;
            Matrix d(y.rows(), y.cols());
            for (std::size_t r = 0; r < y.rows(); ++r) {
                double gy = 0.0;
                for (std::size_t c = 0; c < y.cols(); ++c) gy += g(r, c) * y(r, c);
                for (std::size_t c = 0; c < y.cols(); ++c)
                    d(r, c) = y(r, c) * (g(r, c) - gy);
            }
            bump(0, d);
            return;
        }
    }
}

bool Tape::replay_matches() const {
    for (const Node& n : nodes_) {
        if (n.op == Op::leaf) continue;
        if (!(eval(n) == n.value)) return false;
    }
    return true;
}

NodeId Tape::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    const NodeId ids[] = {a, b};
    OpAttrs attrs;
    attrs.trans_a = trans_a;
    attrs.trans_b = trans_b;
    return record(Op::matmul, ids, attrs);
}
NodeId Tape::add(NodeId a, NodeId b) {
    const NodeId ids[] = {a, b};
    return record(Op::add, ids);
}
NodeId Tape::mul(NodeId a, NodeId b) {
    const NodeId ids[] = {a, b};
    return record(Op::mul, ids);
}
NodeId Tape::concat(std::span<const NodeId> parts, int axis) {
    OpAttrs attrs;
    attrs.axis = axis;
    return record(Op::concat, parts, attrs);
}
NodeId Tape::leaky_relu(NodeId x, double slope) {
    const NodeId ids[] = {x};
    OpAttrs attrs;
    attrs.slope = slope;
    return record(Op::leaky_relu, ids, attrs);
}
NodeId Tape::relu(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::relu, ids);
}
NodeId Tape::softplus(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::softplus, ids);
}
NodeId Tape::exp(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::exp, ids);
}
NodeId Tape::log(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::log, ids);
}
NodeId Tape::square(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::square, ids);
}
NodeId Tape::reduce_sum(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::reduce_sum, ids);
}
NodeId Tape::softmax_row(NodeId x) {
    const NodeId ids[] = {x};
    return record(Op::softmax_row, ids);
}

}  // namespace glue
