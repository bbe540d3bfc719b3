#pragma once

// Hand-built models with a known zero set, for generation and metrics tests.

#include "inrshape/model.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace fixture {

struct Octahedron {
    double base_radius = 0.3;
    double fixed_gain = 0.05;      // radius change per unit z of the first fixed slot
    double trainable_gain = 0.1;   // radius change per unit of trainable dim 0
    double slope = 0.8;            // keeps |grad f| below the synthesis band safety

    double radius(const inrshape::LatentCode& code) const {
        double r = base_radius + trainable_gain * code.trainable[0];
        if (!code.fixed.empty()) r += fixed_gain * code.fixed[0];
        return r;
    }
    static double volume(double r) { return r > 0.0 ? 4.0 / 3.0 * r * r * r : 0.0; }
};

inline std::vector<inrshape::FeatureVector> pool(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<inrshape::FeatureVector> out(n);
    for (auto& f : out) {
        f.volume = 0.02 + 0.04 * u(rng);
        f.isthmus_area = 0.01 + 0.05 * u(rng);
        f.symmetry = 0.5 + 0.5 * u(rng);
    }
    return out;
}

/// Network computing slope * (|x - 0.5|_1 - radius(code)), an octahedron of
/// L1 radius radius(code). `fixed` lists the conditioned features; slot 0
/// scales the radius.
inline inrshape::ShapeModel octahedron_model(std::vector<inrshape::Feature> fixed, std::size_t shapes = 12,
                                             const Octahedron& o = {}, std::uint64_t seed = 3) {
    using namespace inrshape;
    ModelConfig c;
    c.fixed_features = std::move(fixed);
    c.latent_dim = 3;
    c.hidden_width = 12;
    c.hidden_layers = 2;
    c.init_sigma = 0.05;
    c.seed = seed;
    ShapeModel model = create_model(c, pool(shapes, seed));
    const std::size_t k = c.fixed_features.size();
    for (auto& layer : model.network.layers) {
        for (double& v : layer.weight.values()) v = 0.0;
        for (double& v : layer.bias.values()) v = 0.0;
    }
    auto& l0 = model.network.layers[0];
    for (std::size_t i = 0; i < 3; ++i) {
        l0.weight(i, 2 * i) = 1.0;
        l0.bias(0, 2 * i) = -0.5;
        l0.weight(i, 2 * i + 1) = -1.0;
        l0.bias(0, 2 * i + 1) = 0.5;
    }
    if (k > 0) {
        l0.weight(3, 6) = 1.0;
        l0.weight(3, 7) = -1.0;
    }
    l0.weight(3 + k, 8) = 1.0;
    l0.weight(3 + k, 9) = -1.0;
    auto& l1 = model.network.layers[1];
    for (std::size_t u = 0; u < 10; ++u) l1.weight(u, u) = 1.0;
    auto& out = model.network.layers[2];
    for (std::size_t u = 0; u < 6; ++u) out.weight(u, 0) = o.slope;
    out.weight(6, 0) = -o.slope * o.fixed_gain;
    out.weight(7, 0) = o.slope * o.fixed_gain;
    out.weight(8, 0) = -o.slope * o.trainable_gain;
    out.weight(9, 0) = o.slope * o.trainable_gain;
    out.bias(0, 0) = -o.slope * o.base_radius;
    return model;
}

}  // namespace fixture
