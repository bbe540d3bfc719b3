#pragma once

#include "inrshape/features.hpp"
#include "inrshape/mesh.hpp"
#include "inrshape/mlp.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace inrshape {

/// Latent code of one shape. The network sees coordinates, then the fixed
/// part, then the trainable part.
struct LatentCode {
    std::vector<double> fixed;      // z-scored anatomical features, never optimized
    std::vector<double> trainable;  // optimized jointly with the network

    std::size_t size() const { return fixed.size() + trainable.size(); }
    std::vector<double> full() const;
    nlohmann::json to_json() const;
    static LatentCode from_json(const nlohmann::json& j);
    friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

/// Per-feature z-scoring fitted on the training population.
struct FeatureTransform {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};

    /// Population mean and sample standard deviation; a constant feature keeps
    /// a unit scale.
    static FeatureTransform fit(std::span<const FeatureVector> features);
    double to_z(Feature f, double raw) const;
    double to_raw(Feature f, double z) const;
    nlohmann::json to_json() const;
    static FeatureTransform from_json(const nlohmann::json& j);
    friend bool operator==(const FeatureTransform&, const FeatureTransform&) = default;
};

struct ModelConfig {
    std::vector<Feature> fixed_features;  // empty for the unconditioned baseline
    std::size_t latent_dim = 64;
    std::size_t hidden_width = 256;
    std::size_t hidden_layers = 3;
    double init_sigma = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

/// Network weights plus the latent table of the training shapes.
struct ShapeModel {
    ModelConfig config;
    Mlp network;
    std::vector<LatentCode> latents;
    FeatureTransform transform;
    std::vector<FeatureVector> training_features;
    std::vector<std::string> shape_names;
    nlohmann::json training = nlohmann::json::object();  // training settings and summary

    std::size_t fixed_dim() const { return config.fixed_features.size(); }
    std::size_t code_width() const { return fixed_dim() + config.latent_dim; }
    bool conditioned() const { return fixed_dim() > 0; }
    /// Fixed slots for the given raw features.
    std::vector<double> encode_fixed(const FeatureVector& raw) const;
    /// Slot of feature `f` in the fixed part, or -1.
    int fixed_slot(Feature f) const;
    void validate() const;
};

/// n codes with trainable parts drawn i.i.d. from N(0, sigma0^2) and fixed parts
/// copied from `fixed` (one row per shape, or empty).
std::vector<LatentCode> init_latents(std::size_t n_shapes, std::size_t latent_dim, double sigma0, std::uint64_t seed,
                                     std::span<const std::vector<double>> fixed = {});

/// Fresh model for a training population: Kaiming-uniform network, z-scored
/// fixed slots, random trainable codes.
ShapeModel create_model(const ModelConfig& config, std::span<const FeatureVector> features,
                        std::span<const std::string> names = {});

/// Network input rows [x y z | fixed | trainable] for a batch of points.
Tensor2 model_input(std::span<const Vec3> points, const LatentCode& code);

/// Frozen evaluation of f(x, z) for a batch of points, in order.
std::vector<double> predict_sdf(const ShapeModel& model, const LatentCode& code, std::span<const Vec3> points);

/// Versioned binary container: magic, version, JSON header, then little-endian
/// float64 parameter blocks.
std::string encode_checkpoint(const ShapeModel& model);
ShapeModel decode_checkpoint(std::string_view bytes);
void save_checkpoint(const ShapeModel& model, const std::filesystem::path& path);
ShapeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace inrshape
