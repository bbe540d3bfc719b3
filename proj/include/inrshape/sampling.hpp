#pragma once

#include "inrshape/mesh.hpp"

#include <cstdint>
#include <vector>

namespace inrshape {

/// Area-uniform surface samples: a face is drawn with probability proportional
/// to its area, then a uniform barycentric point inside it.
/// Throws ErrorCode::DegenerateMesh when the total area is zero.
std::vector<Vec3> sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

}  // namespace inrshape
