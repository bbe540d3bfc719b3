#include "inrshape/features.hpp"

#include "inrshape/errors.hpp"
#include "inrshape/measures.hpp"

#include <cmath>

namespace inrshape {

std::string_view feature_name(Feature f) {
    switch (f) {
        case Feature::Volume: return "volume";
        case Feature::Isthmus: return "isthmus";
        case Feature::Symmetry: return "symmetry";
    }
    return "unknown";
}

std::optional<Feature> parse_feature(std::string_view name) {
    for (Feature f : kAllFeatures)
        if (feature_name(f) == name) return f;
    if (name == "isthmus_area" || name == "isthmus-area") return Feature::Isthmus;
    return std::nullopt;
}

double FeatureVector::get(Feature f) const {
    switch (f) {
        case Feature::Volume: return volume;
        case Feature::Isthmus: return isthmus_area;
        case Feature::Symmetry: return symmetry;
    }
    fail(ErrorCode::Parameter, "unknown feature");
}

void FeatureVector::set(Feature f, double value) {
    switch (f) {
        case Feature::Volume: volume = value; return;
        case Feature::Isthmus: isthmus_area = value; return;
        case Feature::Symmetry: symmetry = value; return;
    }
    fail(ErrorCode::Parameter, "unknown feature");
}

bool FeatureVector::valid() const {
    return std::isfinite(volume) && volume > 0.0 && std::isfinite(isthmus_area) && isthmus_area >= 0.0 &&
           symmetry >= 0.0 && symmetry <= 1.0;
}

nlohmann::json FeatureVector::to_json() const {
    return {{"volume", volume}, {"isthmus", isthmus_area}, {"symmetry", symmetry}};
}

FeatureVector FeatureVector::from_json(const nlohmann::json& j) {
    FeatureVector f;
    f.volume = j.at("volume").get<double>();
    f.isthmus_area = j.at("isthmus").get<double>();
    f.symmetry = j.at("symmetry").get<double>();
    return f;
}

FeatureVector measure_features(const TriMesh& mesh, const MeasureOptions& options) {
    if (mesh.empty()) fail(ErrorCode::DegenerateMesh, "cannot measure an empty mesh");
    FeatureVector f;
    f.volume = mesh_volume(mesh);
    f.isthmus_area = cross_section_area(mesh, options.plane_axis, options.plane_offset);
    f.symmetry = mirror_iou(mesh, options.plane_axis, options.plane_offset, options.symmetry_resolution).iou;
    return f;
}

}  // namespace inrshape
