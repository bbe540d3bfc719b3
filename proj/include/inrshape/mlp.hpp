#pragma once

#include "inrshape/autodiff.hpp"
#include "inrshape/tensor.hpp"

#include <cstdint>
#include <vector>

namespace inrshape {

struct DenseLayer {
    Tensor2 weight;  // in x out
    Tensor2 bias;    // 1 x out
};

/// Fully connected network with ReLU on every hidden layer and a linear output.
struct Mlp {
    std::vector<DenseLayer> layers;

    /// input -> hidden x hidden_layers -> output, weights drawn uniformly in
    /// +-1/sqrt(fan_in) (Kaiming uniform with a = sqrt(5)), biases likewise.
    static Mlp kaiming_uniform(std::size_t input_width, std::size_t hidden_width,
                               std::size_t hidden_layers, std::size_t output_width,
                               std::uint64_t seed);

    std::size_t input_width() const;
    std::size_t output_width() const;
    std::size_t parameter_count() const;
    bool all_finite() const;

    /// Frozen-weight evaluation. Safe to call concurrently; produces the same
    /// bits as the taped forward pass.
    Tensor2 evaluate(const Tensor2& input) const;
};

/// Tape handles for one forward pass.
struct MlpTrace {
    VarId output;
    std::vector<VarId> weights;
    std::vector<VarId> biases;
};

/// Records the network on `tape`. Weights and biases become leaves.
MlpTrace forward_mlp(Tape& tape, const Mlp& mlp, VarId input);

}  // namespace inrshape
