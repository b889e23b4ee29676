#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

/// Operation vocabulary of the tape. Leaves carry externally supplied values
/// (parameters or constants); everything else is computed when recorded.
enum class Op : std::uint8_t {
    leaf,
    matmul,       // attrs: trans_a, trans_b
    add,          // same shape, or one operand 1x1 (scalar broadcast)
    mul,          // elementwise; same shape or one operand 1x1
    concat,       // attrs: axis (0 = stack rows, 1 = stack columns)
    leaky_relu,   // attrs: slope; gradient at 0 takes the positive side
    relu,         // gradient at 0 takes the positive side
    softplus,     // log(1 + e^x), overflow-safe
    exp,
    log,
    square,
    reduce_sum,   // sum of all entries -> 1x1
    softmax_row,  // row-wise softmax with max subtraction
};

const char* op_name(Op op);

/// Per-op payload. Only the fields relevant to the op kind are read.
struct OpAttrs {
    bool trans_a = false;
    bool trans_b = false;
    int axis = 0;
    double slope = 0.2;
};

using NodeId = std::uint32_t;

/// Reverse-mode differentiation tape. Nodes reference strictly earlier nodes,
/// so node order is a topological order by construction. Forward values are
/// cached at record time; backward() walks ids in reverse.
///
/// A tape is single-threaded; independent tapes may run concurrently.
class Tape {
public:
    NodeId leaf(Matrix value);

    /// Records an operation, computes and caches its value. Throws ShapeError
    /// naming the op kind on dimension mismatch, and Error if an input id is
    /// not already on the tape.
    NodeId record(Op op, std::span<const NodeId> inputs, OpAttrs attrs = {});

    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId concat(std::span<const NodeId> parts, int axis = 0);
    NodeId leaky_relu(NodeId x, double slope);
    NodeId relu(NodeId x);
    NodeId softplus(NodeId x);
    NodeId exp(NodeId x);
    NodeId log(NodeId x);
    NodeId square(NodeId x);
    NodeId reduce_sum(NodeId x);
    NodeId softmax_row(NodeId x);

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    double scalar_value(NodeId id) const { return nodes_[id].value[0]; }
    bool is_leaf(NodeId id) const { return nodes_[id].op == Op::leaf; }
    std::size_t size() const { return nodes_.size(); }

    /// d(root)/d(leaf) for every leaf on the tape; root must be 1x1
    /// (throws otherwise). d(root)/d(root) seeds at 1.
    std::unordered_map<NodeId, Matrix> backward(NodeId root) const;

    /// Recomputes every non-leaf value from the leaves and checks it is
    /// bitwise identical to the cache.
    bool replay_matches() const;

private:
    struct Node {
        Op op;
        OpAttrs attrs;
        std::vector<NodeId> inputs;
        Matrix value;
    };

    Matrix eval(const Node& n) const;
    void accumulate(std::vector<Matrix>& adjoint, const Node& n, NodeId id) const;

    std::vector<Node> nodes_;
};

/// Central-difference gradient estimate of a scalar function, one coordinate
/// at a time: (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). Test oracle for
/// backward(); shares no code with the tape.
template <class F>
Matrix finite_difference_grad(F&& f, const Matrix& x, double eps = 1e-5) {
    Matrix g(x.rows(), x.cols());
    Matrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double hi = f(probe);
        probe[i] = orig - eps;
        const double lo = f(probe);
        probe[i] = orig;
        g[i] = (hi - lo) / (2.0 * eps);
    }
    return g;
}

}  // namespace glue
