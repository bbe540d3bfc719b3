#pragma once

#include "inrshape/mesh.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string_view>

namespace inrshape {

enum class Feature : int { Volume = 0, Isthmus = 1, Symmetry = 2 };
inline constexpr std::array<Feature, 3> kAllFeatures{Feature::Volume, Feature::Isthmus, Feature::Symmetry};

std::string_view feature_name(Feature f);  // "volume", "isthmus", "symmetry"
std::optional<Feature> parse_feature(std::string_view name);

/// Volume (unit^3), mid-plane isthmus area (unit^2) and mirror symmetry in [0,1].
struct FeatureVector {
    double volume = 0.0;
    double isthmus_area = 0.0;
    double symmetry = 0.0;

    double get(Feature f) const;
    void set(Feature f, double value);
    bool valid() const;  // volume > 0, isthmus >= 0, symmetry in [0,1]

    nlohmann::json to_json() const;
    static FeatureVector from_json(const nlohmann::json& j);
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct MeasureOptions {
    int plane_axis = 0;  // left-right axis; the midsagittal plane is normal to it
    double plane_offset = 0.5;
    std::size_t symmetry_resolution = 128;
};

/// Measures the three anatomical features on a watertight mesh.
FeatureVector measure_features(const TriMesh& mesh, const MeasureOptions& options = {});

}  // namespace inrshape
