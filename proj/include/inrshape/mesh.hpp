#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace inrshape {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

struct Aabb {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void extend(const Aabb& b) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }
    bool valid() const { return (lo.array() <= hi.array()).all(); }
    Vec3 extent() const { return hi - lo; }
    double squared_distance(const Vec3& p) const {
        const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
        return d.squaredNorm();
    }
};

/// Indexed triangle surface. Faces are counter-clockwise seen from outside.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;

    bool empty() const { return faces.empty(); }
    const Vec3& corner(std::size_t face, int k) const { return vertices[faces[face][k]]; }

    /// Throws ErrorCode::Parameter for out-of-range indices or non-finite vertices.
    void validate() const;
};

Aabb bounding_box(const TriMesh& mesh);
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double surface_area(const TriMesh& mesh);

/// True when every undirected edge is used by exactly two faces, once in each
/// direction (closed, consistently oriented 2-manifold boundary).
bool is_watertight(const TriMesh& mesh);

/// Number of face-connected pieces (faces sharing a vertex are connected).
std::size_t connected_components(const TriMesh& mesh);

void flip_orientation(TriMesh& mesh);

/// Applies x -> rotation * x + translation to every vertex.
TriMesh rigid_transform(const TriMesh& mesh, const Eigen::Matrix3d& rotation, const Vec3& translation);

/// Axis-aligned box [lo, hi] as 12 outward-oriented triangles.
TriMesh make_box(const Vec3& lo, const Vec3& hi);

/// Subdivided icosahedron projected onto a sphere.
TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions);

/// Concatenates meshes (no welding).
TriMesh merge_meshes(std::span<const TriMesh> meshes);

}  // namespace inrshape
