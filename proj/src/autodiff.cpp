#include "inrshape/autodiff.hpp"

#include "inrshape/errors.hpp"

namespace inrshape {

namespace {

Tensor2 column_sum(const Tensor2& t) {
    Tensor2 out(1, t.cols());
    out.matrix() = t.matrix().colwise().sum();
    return out;
}

void accumulate(Tensor2& slot, Tensor2&& contribution) {
    if (slot.size() == 0) {
        slot = std::move(contribution);
    } else {
        slot.matrix() += contribution.matrix();
    }
}

}  // namespace

const Tensor2& Gradients::at(VarId id) const {
    if (!id.valid() || id.index >= grads_.size()) {
        fail(ErrorCode::State, "gradient requested for a node outside the backward pass");
    }
    return grads_[id.index];
}

const Tape::Node& Tape::node(VarId id) const {
    if (!id.valid() || id.index >= nodes_.size()) {
        fail(ErrorCode::State, "tape node " + std::to_string(id.index) + " was not recorded");
    }
    return nodes_[id.index];
}

VarId Tape::push(Op op, VarId a, VarId b, Tensor2 value, double factor, VarId c) {
    Node n{op, a, b, c, factor, false, std::move(value)};
    if (op == Op::Leaf) {
        n.requires_grad = true;
    } else if (op != Op::Constant) {
        n.requires_grad = (a.valid() && nodes_[a.index].requires_grad) ||
                          (b.valid() && nodes_[b.index].requires_grad) ||
                          (c.valid() && nodes_[c.index].requires_grad);
    }
    nodes_.push_back(std::move(n));
    return VarId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

VarId Tape::leaf(Tensor2 value) { return push(Op::Leaf, {}, {}, std::move(value)); }

VarId Tape::constant(Tensor2 value) { return push(Op::Constant, {}, {}, std::move(value)); }

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor2& x = node(a).value;
    const Tensor2& y = node(b).value;
    if (x.cols() != y.rows()) {
        fail(ErrorCode::Shape, "matmul: " + x.shape_string() + " * " + y.shape_string());
    }
    Tensor2 out(x.rows(), y.cols());
    out.matrix().noalias() = x.matrix() * y.matrix();
    return push(Op::MatMul, a, b, std::move(out));
}

VarId Tape::add(VarId a, VarId b) {
    require_same_shape(node(a).value, node(b).value, "add");
    Tensor2 out = node(a).value;
    out.matrix() += node(b).value.matrix();
    return push(Op::Add, a, b, std::move(out));
}

VarId Tape::sub(VarId a, VarId b) {
    require_same_shape(node(a).value, node(b).value, "sub");
    Tensor2 out = node(a).value;
    out.matrix() -= node(b).value.matrix();
    return push(Op::Sub, a, b, std::move(out));
}

VarId Tape::mul(VarId a, VarId b) {
    require_same_shape(node(a).value, node(b).value, "mul");
    Tensor2 out = node(a).value;
    out.matrix().array() *= node(b).value.matrix().array();
    return push(Op::Mul, a, b, std::move(out));
}

VarId Tape::scale(VarId a, double factor) {
    Tensor2 out = node(a).value;
    out.matrix() *= factor;
    return push(Op::Scale, a, {}, std::move(out), factor);
}

VarId Tape::add_row(VarId a, VarId row) {
    const Tensor2& x = node(a).value;
    const Tensor2& r = node(row).value;
    if (r.rows() != 1 || r.cols() != x.cols()) {
        fail(ErrorCode::Shape, "add_row: " + x.shape_string() + " + " + r.shape_string());
    }
    Tensor2 out = x;
    out.matrix().rowwise() += r.matrix().row(0);
    return push(Op::AddRow, a, row, std::move(out));
}

VarId Tape::relu(VarId a) {
    Tensor2 out = node(a).value;
    out.matrix() = out.matrix().cwiseMax(0.0);
    return push(Op::Relu, a, {}, std::move(out));
}

VarId Tape::broadcast_rows(VarId row, std::size_t rows) {
    const Tensor2& r = node(row).value;
    if (r.rows() != 1) fail(ErrorCode::Shape, "broadcast_rows: expected a row, got " + r.shape_string());
    Tensor2 out(rows, r.cols());
    out.matrix().rowwise() = r.matrix().row(0);
    return push(Op::BroadcastRows, row, {}, std::move(out));
}

VarId Tape::concat_cols(VarId a, VarId b) {
    const Tensor2& x = node(a).value;
    const Tensor2& y = node(b).value;
    if (x.rows() != y.rows()) {
        fail(ErrorCode::Shape, "concat_cols: " + x.shape_string() + " | " + y.shape_string());
    }
    Tensor2 out(x.rows(), x.cols() + y.cols());
    auto m = out.matrix();
    m.leftCols(Eigen::Index(x.cols())) = x.matrix();
    m.rightCols(Eigen::Index(y.cols())) = y.matrix();
    return push(Op::ConcatCols, a, b, std::move(out));
}

VarId Tape::sum_squares(VarId a) {
    return push(Op::SumSquares, a, {}, Tensor2::scalar(node(a).value.matrix().squaredNorm()));
}

VarId Tape::dense(VarId a, VarId weight, VarId bias, bool relu) {
    const Tensor2& x = node(a).value;
    const Tensor2& w = node(weight).value;
    const Tensor2& b = node(bias).value;
    if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
        fail(ErrorCode::Shape, "dense: " + x.shape_string() + " * " + w.shape_string() + " + " + b.shape_string());
    }
    Tensor2 out(x.rows(), w.cols());
    out.matrix().noalias() = x.matrix() * w.matrix();
    out.matrix().rowwise() += b.matrix().row(0);
    if (relu) out.matrix() = out.matrix().cwiseMax(0.0);
    return push(relu ? Op::DenseRelu : Op::Dense, a, weight, std::move(out), 0.0, bias);
}

const Tensor2& Tape::value(VarId id) const { return node(id).value; }

bool Tape::requires_grad(VarId id) const { return node(id).requires_grad; }

Gradients Tape::backward(VarId scalar_output) const {
    return backward(scalar_output, Tensor2::scalar(1.0));
}

Gradients Tape::backward(VarId output, const Tensor2& seed) const {
    if (nodes_.empty()) fail(ErrorCode::State, "backward called before any forward pass");
    require_same_shape(node(output).value, seed, "backward seed");

    Gradients result;
    auto& grads = result.grads_;
    grads.resize(output.index + 1);
    grads[output.index] = seed;

    auto wants = [&](VarId id) { return id.valid() && nodes_[id.index].requires_grad; };

    for (std::size_t i = output.index + 1; i-- > 0;) {
        const Node& n = nodes_[i];
        if (!n.requires_grad || grads[i].size() == 0) continue;
        const Tensor2& g = grads[i];
        switch (n.op) {
            case Op::Leaf:
            case Op::Constant:
                break;
            case Op::MatMul: {
                const Tensor2& x = nodes_[n.a.index].value;
                const Tensor2& y = nodes_[n.b.index].value;
                if (wants(n.a)) {
                    Tensor2 dx(x.rows(), x.cols());
                    dx.matrix().noalias() = g.matrix() * y.matrix().transpose();
                    accumulate(grads[n.a.index], std::move(dx));
                }
                if (wants(n.b)) {
                    Tensor2 dy(y.rows(), y.cols());
                    dy.matrix().noalias() = x.matrix().transpose() * g.matrix();
                    accumulate(grads[n.b.index], std::move(dy));
                }
                break;
            }
            case Op::Add:
                if (wants(n.a)) accumulate(grads[n.a.index], Tensor2(g));
                if (wants(n.b)) accumulate(grads[n.b.index], Tensor2(g));
                break;
            case Op::Sub:
                if (wants(n.a)) accumulate(grads[n.a.index], Tensor2(g));
                if (wants(n.b)) {
                    Tensor2 neg = g;
                    neg.matrix() *= -1.0;
                    accumulate(grads[n.b.index], std::move(neg));
                }
                break;
            case Op::Mul:
                if (wants(n.a)) {
                    Tensor2 d = g;
                    d.matrix().array() *= nodes_[n.b.index].value.matrix().array();
                    accumulate(grads[n.a.index], std::move(d));
                }
                if (wants(n.b)) {
                    Tensor2 d = g;
                    d.matrix().array() *= nodes_[n.a.index].value.matrix().array();
                    accumulate(grads[n.b.index], std::move(d));
                }
                break;
            case Op::Scale:
                if (wants(n.a)) {
                    Tensor2 d = g;
                    d.matrix() *= n.factor;
                    accumulate(grads[n.a.index], std::move(d));
                }
                break;
            case Op::AddRow:
                if (wants(n.a)) accumulate(grads[n.a.index], Tensor2(g));
                if (wants(n.b)) accumulate(grads[n.b.index], column_sum(g));
                break;
            case Op::Relu:
                if (wants(n.a)) {
                    Tensor2 d = g;
                    d.matrix().array() *= (n.value.matrix().array() > 0.0).cast<double>();
                    accumulate(grads[n.a.index], std::move(d));
                }
                break;
            case Op::BroadcastRows:
                if (wants(n.a)) accumulate(grads[n.a.index], column_sum(g));
                break;
            case Op::ConcatCols: {
                const auto left = Eigen::Index(nodes_[n.a.index].value.cols());
                const auto right = Eigen::Index(nodes_[n.b.index].value.cols());
                if (wants(n.a)) {
                    Tensor2 d(g.rows(), std::size_t(left));
                    d.matrix() = g.matrix().leftCols(left);
                    accumulate(grads[n.a.index], std::move(d));
                }
                if (wants(n.b)) {
                    Tensor2 d(g.rows(), std::size_t(right));
                    d.matrix() = g.matrix().rightCols(right);
                    accumulate(grads[n.b.index], std::move(d));
                }
                break;
            }
            case Op::Dense:
            case Op::DenseRelu: {
                Tensor2 masked;
                if (n.op == Op::DenseRelu) {
                    masked = g;
                    masked.matrix().array() *= (n.value.matrix().array() > 0.0).cast<double>();
                }
                const Tensor2& d = n.op == Op::DenseRelu ? masked : g;
                const Tensor2& x = nodes_[n.a.index].value;
                const Tensor2& w = nodes_[n.b.index].value;
                if (wants(n.b)) {
                    Tensor2 dw(w.rows(), w.cols());
                    dw.matrix().noalias() = x.matrix().transpose() * d.matrix();
                    accumulate(grads[n.b.index], std::move(dw));
                }
                if (wants(n.c)) accumulate(grads[n.c.index], column_sum(d));
                if (wants(n.a)) {
                    Tensor2 dx(x.rows(), x.cols());
                    dx.matrix().noalias() = d.matrix() * w.matrix().transpose();
                    accumulate(grads[n.a.index], std::move(dx));
                }
                break;
            }
            case Op::SumSquares:
                if (wants(n.a)) {
                    Tensor2 d = nodes_[n.a.index].value;
                    d.matrix() *= 2.0 * g[0];
                    accumulate(grads[n.a.index], std::move(d));
                }
                break;
        }
    }

    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].size() == 0) {
            grads[i] = Tensor2(nodes_[i].value.rows(), nodes_[i].value.cols());
        }
    }
    return result;
}

}  // namespace inrshape
