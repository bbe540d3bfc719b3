#pragma once

#include "inrshape/mesh.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace inrshape {

/// Per-axis affine map x -> 0.5 + scale * (x - reference) into the unit cube.
struct NormalizationTransform {
    Vec3 reference = Vec3::Constant(0.5);
    Vec3 scale = Vec3::Ones();

    Vec3 apply(const Vec3& x) const { return Vec3::Constant(0.5) + scale.cwiseProduct(x - reference); }
    Vec3 invert(const Vec3& u) const { return reference + (u - Vec3::Constant(0.5)).cwiseQuotient(scale); }
    TriMesh apply(const TriMesh& mesh) const;
    TriMesh invert(const TriMesh& mesh) const;

    nlohmann::json to_json() const;
    static NormalizationTransform from_json(const nlohmann::json& j);
};

struct NormalizedPopulation {
    std::vector<TriMesh> meshes;
    NormalizationTransform transform;
};

/// Shared per-axis scale chosen so the largest distance from `reference` over
/// the whole population maps to 0.5: every mesh lands in [0,1]^3 and relative
/// sizes are preserved. Throws ErrorCode::DegenerateMesh on zero extent.
NormalizedPopulation normalize_population(std::span<const TriMesh> meshes,
                                          const Vec3& reference = Vec3::Constant(0.5));

}  // namespace inrshape
