#pragma once

#include "inrshape/features.hpp"
#include "inrshape/mesh.hpp"
#include "inrshape/normalize.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace inrshape {

/// Coordinate / signed-distance pairs of one shape. The first `surface_count`
/// entries are surface samples with distance exactly 0.
struct SampleSet {
    std::uint32_t shape_id = 0;
    std::vector<Vec3> points;
    std::vector<double> sdf;
    std::size_t surface_count = 0;

    std::size_t size() const { return points.size(); }
};

struct SampleOptions {
    std::size_t n_surface = 40000;
    std::size_t n_perturbed = 10000;
    double sigma = 0.1;
};

/// Surface points (sdf 0) plus surface points drawn with replacement and
/// displaced by isotropic Gaussian noise, labelled with the exact signed
/// distance. Perturbed points are not clipped to the unit cube.
SampleSet build_sample_set(const TriMesh& mesh, const SampleOptions& options, std::uint64_t seed,
                           std::uint32_t shape_id = 0);

/// Two ellipsoidal lobes joined by an optional capsule bridge, rotated about
/// the anterior-posterior (y) axis through the cube centre by `tilt`.
struct LobeParams {
    Vec3 left_radii = Vec3(0.09, 0.1, 0.18);
    Vec3 right_radii = Vec3(0.09, 0.1, 0.18);
    Vec3 left_offset = Vec3(-0.15, 0.0, 0.0);  // lobe centre relative to (0.5, 0.5, 0.5)
    Vec3 right_offset = Vec3(0.15, 0.0, 0.0);
    double bridge_radius = 0.04;  // 0 gives two separate lobes
    double tilt = 0.0;            // radians

    nlohmann::json to_json() const;
    static LobeParams from_json(const nlohmann::json& j);
};

/// Signed distance bound whose zero set is the exact lobe surface.
double lobe_field(const LobeParams& params, const Vec3& p);

/// Throws ErrorCode::Parameter when the shape would leave [0.05, 0.95]^3, a lobe
/// crosses the mid-plane, or the bridge cannot be resolved at `mesh_resolution`.
void validate_lobe_params(const LobeParams& params, std::size_t mesh_resolution);

struct LobeShape {
    TriMesh mesh;
    FeatureVector features;
};

/// Marching cubes on the analytic field over a (resolution+1)^3 lattice
/// spanning the unit cube, followed by feature measurement.
LobeShape generate_lobe_shape(const LobeParams& params, std::size_t mesh_resolution = 96,
                              const MeasureOptions& measure = {});

struct ParamRanges {
    double split_fraction = 0.25;
    std::array<double, 2> global_scale{0.85, 1.15};
    std::array<double, 2> lobe_scale{0.85, 1.15};
    std::array<double, 2> radius_x{0.07, 0.11};
    std::array<double, 2> radius_y{0.08, 0.12};
    std::array<double, 2> radius_z{0.14, 0.20};
    std::array<double, 2> gap{0.02, 0.07};  // lobe inner edge to mid-plane
    std::array<double, 2> offset_y{-0.03, 0.03};
    std::array<double, 2> offset_z{-0.04, 0.04};
    std::array<double, 2> bridge_radius{0.025, 0.05};
    std::array<double, 2> tilt{-0.3, 0.3};

    nlohmann::json to_json() const;
    static ParamRanges from_json(const nlohmann::json& j);
};

/// Draws one valid parameter set (rejection sampling against validate_lobe_params).
LobeParams sample_lobe_params(std::mt19937_64& rng, const ParamRanges& ranges, std::size_t mesh_resolution, bool split);

/// Exactly round(n * split_fraction) split flags in random order.
std::vector<bool> assign_splits(std::mt19937_64& rng, std::size_t n, double split_fraction);

struct ShapeRecord {
    std::uint32_t id = 0;
    std::string name;
    std::optional<LobeParams> params;  // set for synthetic shapes
    TriMesh mesh;                      // normalized
    SampleSet samples;
    FeatureVector features;            // measured on the normalized mesh
};

struct Dataset {
    std::vector<ShapeRecord> shapes;
    NormalizationTransform normalization;
    SampleOptions sampling;
    std::uint64_t seed = 0;
    std::optional<double> mm_per_unit;
    nlohmann::json source;  // generator settings or import description

    std::vector<FeatureVector> features() const;
    std::vector<TriMesh> meshes() const;
    std::vector<SampleSet> sample_sets() const;
    const ShapeRecord& shape(std::uint32_t id) const;
};

struct PopulationOptions {
    std::size_t n = 20;
    std::uint64_t seed = 0;
    ParamRanges ranges;
    std::size_t mesh_resolution = 96;
    SampleOptions sampling;
    bool build_samples = true;
    MeasureOptions measure;
};

/// Reproducible synthetic population, jointly normalized about the cube centre.
/// The split shapes are assigned with assign_splits.
Dataset generate_population(const PopulationOptions& options);

/// Builds a dataset from existing watertight meshes, all centred on `reference`.
Dataset import_meshes(std::span<const std::filesystem::path> paths, const Vec3& reference,
                      const SampleOptions& sampling, std::uint64_t seed, const MeasureOptions& measure = {});

/// Directory layout: manifest.json, <name>.obj and <name>.samples (little-endian
/// float64 rows x, y, z, s) per shape.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace inrshape
