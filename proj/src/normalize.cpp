#include "inrshape/normalize.hpp"

#include "inrshape/errors.hpp"

#include <cmath>

namespace inrshape {

TriMesh NormalizationTransform::apply(const TriMesh& mesh) const {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = apply(v);
    return out;
}

TriMesh NormalizationTransform::invert(const TriMesh& mesh) const {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = invert(v);
    return out;
}

nlohmann::json NormalizationTransform::to_json() const {
    return {{"reference", {reference.x(), reference.y(), reference.z()}},
            {"scale", {scale.x(), scale.y(), scale.z()}}};
}

NormalizationTransform NormalizationTransform::from_json(const nlohmann::json& j) {
    NormalizationTransform t;
    for (int k = 0; k < 3; ++k) {
        t.reference[k] = j.at("reference").at(k).get<double>();
        t.scale[k] = j.at("scale").at(k).get<double>();
    }
    return t;
}

NormalizedPopulation normalize_population(std::span<const TriMesh> meshes, const Vec3& reference) {
    if (meshes.empty()) fail(ErrorCode::Parameter, "normalize_population needs at least one mesh");
    Vec3 half_extent = Vec3::Zero();
    for (const auto& mesh : meshes) {
        for (const auto& v : mesh.vertices) half_extent = half_extent.cwiseMax((v - reference).cwiseAbs());
    }
    for (int k = 0; k < 3; ++k) {
        if (!(half_extent[k] > 0.0)) {
            fail(ErrorCode::DegenerateMesh, "population has zero extent along axis " + std::to_string(k));
        }
    }
    NormalizedPopulation out;
    out.transform.reference = reference;
    out.transform.scale = Vec3::Constant(0.5).cwiseQuotient(half_extent);
    out.meshes.reserve(meshes.size());
    for (const auto& mesh : meshes) out.meshes.push_back(out.transform.apply(mesh));
    return out;
}

}  // namespace inrshape
