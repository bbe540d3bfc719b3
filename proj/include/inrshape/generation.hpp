#pragma once

#include "inrshape/features.hpp"
#include "inrshape/marching_cubes.hpp"
#include "inrshape/mlp_kernel.hpp"
#include "inrshape/model.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace inrshape {

struct SynthesisOptions {
    std::size_t resolution = 64;  // cell centres per axis
    /// Skip evaluating blocks whose centre value proves them far from the
    /// surface (assuming |grad f| <= band_safety) and fill them with that value.
    bool narrow_band = true;
    double band_safety = 1.5;
    Precision precision = Precision::Float32;

    void validate() const;
    nlohmann::json to_json() const;
};

struct Synthesis {
    TriMesh mesh;
    bool empty = false;  // the predicted field has no zero crossing
};

/// Predicted SDF at the cell centres of [0,1]^3, x fastest.
ScalarGrid evaluate_grid(const ShapeModel& model, const LatentCode& code, const SynthesisOptions& options = {});

/// Zero level set of the predicted field. The grid is closed with one layer of
/// positive values, so shapes touching the cube faces stay watertight.
Synthesis synthesize(const ShapeModel& model, const LatentCode& code, const SynthesisOptions& options = {});

/// Per-dimension normal fit of the trained codes plus the empirical pool of
/// training feature triples.
struct LatentSampler {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<Feature> fixed_features;
    FeatureTransform transform;
    std::vector<FeatureVector> feature_pool;

    nlohmann::json to_json() const;
    static LatentSampler from_json(const nlohmann::json& j);
};

/// Sample mean and standard deviation (n - 1) of every trainable dimension.
LatentSampler fit_sampler(const ShapeModel& model);

struct FeatureOverrides {
    std::optional<double> volume;
    std::optional<double> isthmus;
    std::optional<double> symmetry;

    std::optional<double> get(Feature f) const;
    void set(Feature f, double value);
    bool any() const { return volume || isthmus || symmetry; }
};

struct CohortOptions {
    SynthesisOptions synthesis;
    bool measure = true;
    MeasureOptions measure_options;
};

struct CohortMember {
    std::size_t index = 0;
    LatentCode code;
    std::optional<FeatureVector> conditioned;  // raw feature values written into the fixed slots
    std::size_t pool_index = 0;                // training shape the fixed triple came from
    bool extrapolated = false;                 // an override lies outside the training range
    Synthesis synthesis;
    std::optional<FeatureVector> measured;     // absent for empty meshes
};

/// Member i uses its own generator derived from (seed, i): trainable dims from
/// the fitted normals, fixed dims from one jointly drawn training triple with
/// the overrides substituted. Overrides need a conditioned model.
std::vector<CohortMember> generate_cohort(const ShapeModel& model, const LatentSampler& sampler, std::size_t n,
                                          std::uint64_t seed, const FeatureOverrides& overrides = {},
                                          const CohortOptions& options = {});

/// Raw-unit change per feature, indexed by Feature.
using FeatureDeltas = std::array<double, 3>;

struct EditOptions {
    SynthesisOptions synthesis;
    double clamp_sigma = 3.0;  // edited slots are clamped to +-clamp_sigma in z units; <= 0 disables
    bool measure = true;
    MeasureOptions measure_options;
};

struct EditStep {
    FeatureDeltas deltas{};
    LatentCode code;
    FeatureVector conditioned;  // raw values of the fixed slots after clamping
    bool clamped = false;
    Synthesis synthesis;
    std::optional<FeatureVector> measured;
};

/// Keeps the trainable part of `base` and moves the fixed slots by `deltas`
/// per step. Slots with a zero delta are left bit-identical. Throws
/// ErrorCode::UnsupportedModel for unconditioned models.
std::vector<EditStep> edit_shape(const ShapeModel& model, const LatentCode& base, std::span<const FeatureDeltas> steps,
                                 const EditOptions& options = {});

/// Deltas that move `feature` of `base` linearly from `from` to `to` (raw
/// units) in `steps` steps.
std::vector<FeatureDeltas> sweep_deltas(const ShapeModel& model, const LatentCode& base, Feature feature, double from,
                                        double to, std::size_t steps);

/// Raw feature values encoded in the fixed part of a code (unconditioned
/// features are 0).
FeatureVector decode_fixed(const ShapeModel& model, const LatentCode& code);

}  // namespace inrshape
