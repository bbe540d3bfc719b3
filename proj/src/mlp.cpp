#include "inrshape/mlp.hpp"

#include "inrshape/errors.hpp"

#include <cmath>
#include <random>

namespace inrshape {

Mlp Mlp::kaiming_uniform(std::size_t input_width, std::size_t hidden_width,
                         std::size_t hidden_layers, std::size_t output_width,
                         std::uint64_t seed) {
    if (input_width == 0 || hidden_width == 0 || output_width == 0) {
        fail(ErrorCode::Config, "network widths must be positive");
    }
    std::mt19937_64 rng(seed);
    Mlp mlp;
    std::size_t fan_in = input_width;
    for (std::size_t layer = 0; layer <= hidden_layers; ++layer) {
        const std::size_t fan_out = layer == hidden_layers ? output_width : hidden_width;
        const double w_bound = 1.0 / std::sqrt(double(fan_in));
        const double b_bound = 1.0 / std::sqrt(double(fan_in));
        std::uniform_real_distribution<double> w_dist(-w_bound, w_bound);
        std::uniform_real_distribution<double> b_dist(-b_bound, b_bound);
        DenseLayer dense{Tensor2(fan_in, fan_out), Tensor2(1, fan_out)};
        for (double& w : dense.weight.values()) w = w_dist(rng);
        for (double& b : dense.bias.values()) b = b_dist(rng);
        mlp.layers.push_back(std::move(dense));
        fan_in = fan_out;
    }
    return mlp;
}

std::size_t Mlp::input_width() const { return layers.empty() ? 0 : layers.front().weight.rows(); }

std::size_t Mlp::output_width() const { return layers.empty() ? 0 : layers.back().weight.cols(); }

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

bool Mlp::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
    }
    return true;
}

Tensor2 Mlp::evaluate(const Tensor2& input) const {
    if (layers.empty()) fail(ErrorCode::State, "evaluate on an empty network");
    if (input.cols() != input_width()) {
        fail(ErrorCode::Shape, "network input " + input.shape_string() + " expects width " +
                                   std::to_string(input_width()));
    }
    constexpr std::size_t kRowBlock = 48;
    const std::size_t padded = (input.rows() + kRowBlock - 1) / kRowBlock * kRowBlock;
    Tensor2 h(padded, input.cols());
    h.matrix().topRows(Eigen::Index(input.rows())) = input.matrix();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const DenseLayer& l = layers[i];
        Tensor2 next(h.rows(), l.weight.cols());
        next.matrix().noalias() = h.matrix() * l.weight.matrix();
        next.matrix().rowwise() += l.bias.matrix().row(0);
        if (i + 1 < layers.size()) next.matrix() = next.matrix().cwiseMax(0.0);
        h = std::move(next);
    }
    Tensor2 out(input.rows(), h.cols());
    out.matrix() = h.matrix().topRows(Eigen::Index(input.rows()));
    return out;
}

MlpTrace forward_mlp(Tape& tape, const Mlp& mlp, VarId input) {
    if (mlp.layers.empty()) fail(ErrorCode::State, "forward on an empty network");
    if (tape.value(input).cols() != mlp.input_width()) {
        fail(ErrorCode::Shape, "network input " + tape.value(input).shape_string() +
                                   " expects width " + std::to_string(mlp.input_width()));
    }
    MlpTrace trace;
    VarId h = input;
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        const VarId w = tape.leaf(mlp.layers[i].weight);
        const VarId b = tape.leaf(mlp.layers[i].bias);
        trace.weights.push_back(w);
        trace.biases.push_back(b);
        h = tape.dense(h, w, b, i + 1 < mlp.layers.size());
    }
    trace.output = h;
    return trace;
}

}  // namespace inrshape
