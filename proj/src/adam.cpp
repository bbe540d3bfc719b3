#include "inrshape/adam.hpp"

#include "inrshape/errors.hpp"

#include <cmath>

namespace inrshape {

AdamState AdamState::for_shapes(std::span<const Tensor2> params, AdamConfig config) {
    AdamState state;
    state.config = config;
    for (const auto& p : params) {
        state.first_moment.emplace_back(p.rows(), p.cols());
        state.second_moment.emplace_back(p.rows(), p.cols());
    }
    return state;
}

void adam_step(AdamState& state, std::span<Tensor2* const> params,
               std::span<const Tensor2> grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        fail(ErrorCode::Shape, "adam_step: " + std::to_string(params.size()) + " params, " +
                                   std::to_string(grads.size()) + " grads, " +
                                   std::to_string(state.first_moment.size()) + " moment buffers");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(*params[i], grads[i], "adam_step gradient");
        require_same_shape(*params[i], state.first_moment[i], "adam_step moment");
    }

    const AdamConfig& c = state.config;
    state.step += 1;
    const double t = double(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->values();
        auto g = grads[i].values();
        auto m = state.first_moment[i].values();
        auto v = state.second_moment[i].values();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            p[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

}  // namespace inrshape
