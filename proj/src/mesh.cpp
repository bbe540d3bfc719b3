#include "inrshape/mesh.hpp"

#include "inrshape/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

namespace inrshape {

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    return (std::uint64_t(a) << 32) | std::uint64_t(b);
}

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

void TriMesh::validate() const {
    for (const auto& v : vertices) {
        if (!v.allFinite()) fail(ErrorCode::Parameter, "mesh has a non-finite vertex");
    }
    for (const auto& f : faces) {
        for (auto idx : f) {
            if (idx >= vertices.size()) {
                fail(ErrorCode::Parameter, "face index " + std::to_string(idx) + " out of range (" +
                                               std::to_string(vertices.size()) + " vertices)");
            }
        }
    }
}

Aabb bounding_box(const TriMesh& mesh) {
    Aabb box;
    for (const auto& f : mesh.faces) {
        for (auto idx : f) box.extend(mesh.vertices[idx]);
    }
    return box;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const TriMesh& mesh) {
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += triangle_area(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
    }
    return total;
}

bool is_watertight(const TriMesh& mesh) {
    if (mesh.faces.empty()) return false;
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(mesh.faces.size() * 3);
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            const auto a = f[k];
            const auto b = f[(k + 1) % 3];
            if (a == b) return false;
            if (++directed[edge_key(a, b)] > 1) return false;
        }
    }
    for (const auto& [key, count] : directed) {
        const auto a = std::uint32_t(key >> 32);
        const auto b = std::uint32_t(key & 0xffffffffu);
        if (!directed.contains(edge_key(b, a))) return false;
    }
    return true;
}

std::size_t connected_components(const TriMesh& mesh) {
    std::vector<std::uint32_t> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0u);
    std::vector<bool> used(mesh.vertices.size(), false);
    for (const auto& f : mesh.faces) {
        used[f[0]] = used[f[1]] = used[f[2]] = true;
        const auto r0 = find_root(parent, f[0]);
        for (int k = 1; k < 3; ++k) {
            const auto rk = find_root(parent, f[k]);
            if (rk != r0) parent[rk] = r0;
        }
    }
    std::size_t count = 0;
    for (std::uint32_t v = 0; v < parent.size(); ++v) {
        if (used[v] && find_root(parent, v) == v) ++count;
    }
    return count;
}

void flip_orientation(TriMesh& mesh) {
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);
}

TriMesh rigid_transform(const TriMesh& mesh, const Eigen::Matrix3d& rotation, const Vec3& translation) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = rotation * v + translation;
    return out;
}

TriMesh make_box(const Vec3& lo, const Vec3& hi) {
    TriMesh m;
    for (int k = 0; k < 8; ++k) {
        m.vertices.emplace_back((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(),
                                (k & 4) ? hi.z() : lo.z());
    }
    // Two triangles per face, counter-clockwise from outside.
    m.faces = {{0, 2, 1}, {1, 2, 3},   // z = lo
               {4, 5, 6}, {5, 7, 6},   // z = hi
               {0, 1, 4}, {1, 5, 4},   // y = lo
               {2, 6, 3}, {3, 6, 7},   // y = hi
               {0, 4, 2}, {2, 4, 6},   // x = lo
               {1, 3, 5}, {3, 7, 5}};  // x = hi
    return m;
}

TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                               {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                               {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
        auto mid = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const auto idx = std::uint32_t(verts.size() - 1);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const auto ab = mid(f[0], f[1]);
            const auto bc = mid(f[1], f[2]);
            const auto ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriMesh m;
    m.faces = std::move(faces);
    m.vertices.reserve(verts.size());
    for (const auto& v : verts) m.vertices.push_back(center + radius * v);
    return m;
}

TriMesh merge_meshes(std::span<const TriMesh> meshes) {
    TriMesh out;
    for (const auto& m : meshes) {
        const auto base = std::uint32_t(out.vertices.size());
        out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
        for (const auto& f : m.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    }
    return out;
}

}  // namespace inrshape
