#pragma once

#include "inrshape/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace inrshape {

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam moments for a fixed list of parameter tensors.
struct AdamState {
    AdamConfig config;
    std::vector<Tensor2> first_moment;
    std::vector<Tensor2> second_moment;
    std::uint64_t step = 0;

    static AdamState for_shapes(std::span<const Tensor2> params, AdamConfig config);
};

/// One in-place Adam update. `params` and `grads` must align with the state.
void adam_step(AdamState& state, std::span<Tensor2* const> params,
               std::span<const Tensor2> grads);

}  // namespace inrshape
