#pragma once

#include "inrshape/mesh.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace inrshape {

struct ClosestPoint {
    Vec3 point;
    std::uint32_t face = 0;
    double squared_distance = 0.0;
};

/// Immutable mesh with a bounding-volume hierarchy and angle-weighted
/// pseudonormals. All queries are const and safe for concurrent readers.
class MeshQuery {
public:
    explicit MeshQuery(TriMesh mesh);

    const TriMesh& mesh() const { return mesh_; }
    bool watertight() const { return watertight_; }

    ClosestPoint closest(const Vec3& p) const;
    double unsigned_distance(const Vec3& p) const;

    /// Exact Euclidean distance, negative inside. The sign comes from the
    /// angle-weighted pseudonormal of the closest feature; when that test is
    /// numerically ambiguous the generalized winding number decides.
    /// Throws ErrorCode::NonWatertight on open meshes.
    double signed_distance(const Vec3& p) const;

    /// Generalized winding number (sum of signed solid angles / 4pi).
    double winding_number(const Vec3& p) const;

    /// Inside test by counting crossings of the +x ray from p.
    bool inside_by_parity(const Vec3& p) const;

private:
    struct Node {
        Aabb box;
        std::uint32_t left = 0;   // child index, or first face for leaves
        std::uint32_t right = 0;  // child index, or face count for leaves
        bool leaf = false;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);
    double pseudonormal_sign(const Vec3& p, const ClosestPoint& cp) const;

    TriMesh mesh_;
    bool watertight_ = false;
    double orientation_ = 1.0;  // -1 when faces wind inward
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::vector<Vec3> face_normals_;    // unit, zero for degenerate faces
    std::vector<Vec3> vertex_normals_;  // angle weighted, unnormalized
    std::vector<std::array<std::uint32_t, 3>> edge_ids_;  // per face, per edge
    std::vector<Vec3> edge_normals_;
};

/// One-shot convenience wrapper; builds a MeshQuery per call.
double signed_distance(const TriMesh& mesh, const Vec3& p);

/// Crossing of the line {p : p[u] = a, p[v] = b} (running along `axis`) with
/// triangle (p0, p1, p2). Shared edges and vertices are assigned to exactly one
/// of the adjacent triangles, so crossings along a closed surface always pair
/// up. Returns the coordinate along `axis`.
std::optional<double> line_triangle_crossing(int axis, double a, double b, const Vec3& p0,
                                             const Vec3& p1, const Vec3& p2);

}  // namespace inrshape
