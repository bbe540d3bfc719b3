#pragma once

#include "inrshape/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace inrshape {

/// Handle to a node on a Tape.
struct VarId {
    std::uint32_t index = UINT32_MAX;
    bool valid() const { return index != UINT32_MAX; }
    friend bool operator==(VarId, VarId) = default;
};

/// Gradient of a backward pass with respect to every node that requires one.
class Gradients {
public:
    /// Gradient for `id`. Nodes that do not require a gradient yield zeros.
    const Tensor2& at(VarId id) const;

private:
    friend class Tape;
    std::vector<Tensor2> grads_;
};

/// Reverse-mode tape for the small set of ops the conditioned MLP needs.
///
/// Nodes are appended in evaluation order, so parents always precede children
/// and the backward sweep is a single reverse pass. A tape is meant to be
/// rebuilt per minibatch.
///
/// ReLU uses a zero subgradient at exactly 0.
class Tape {
public:
    VarId leaf(Tensor2 value);      // differentiable input (parameter or latent)
    VarId constant(Tensor2 value);  // no gradient flows into it

    VarId matmul(VarId a, VarId b);
    VarId add(VarId a, VarId b);
    VarId sub(VarId a, VarId b);
    VarId mul(VarId a, VarId b);  // elementwise
    VarId scale(VarId a, double factor);
    VarId add_row(VarId a, VarId row);  // adds a 1 x cols row to every row of a
    VarId relu(VarId a);
    VarId broadcast_rows(VarId row, std::size_t rows);
    VarId concat_cols(VarId a, VarId b);
    VarId sum_squares(VarId a);  // 1 x 1
    /// a * weight + bias (bias a 1 x cols row), optionally through ReLU, as one node.
    VarId dense(VarId a, VarId weight, VarId bias, bool relu);

    const Tensor2& value(VarId id) const;
    bool requires_grad(VarId id) const;
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// Propagates `seed` (same shape as the output value) back to all leaves.
    Gradients backward(VarId output, const Tensor2& seed) const;
    /// Shorthand for a 1 x 1 output with seed 1.
    Gradients backward(VarId scalar_output) const;

private:
    enum class Op : std::uint8_t {
        Leaf, Constant, MatMul, Add, Sub, Mul, Scale, AddRow, Relu,
        BroadcastRows, ConcatCols, SumSquares, Dense, DenseRelu,
    };

    struct Node {
        Op op;
        VarId a;
        VarId b;
        VarId c;
        double factor = 0.0;
        bool requires_grad = false;
        Tensor2 value;
    };

    const Node& node(VarId id) const;
    VarId push(Op op, VarId a, VarId b, Tensor2 value, double factor = 0.0, VarId c = {});

    std::vector<Node> nodes_;
};

}  // namespace inrshape
