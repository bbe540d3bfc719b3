#include "inrshape/mesh_query.hpp"

#include "inrshape/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace inrshape {

namespace {

enum class Feature { Face, EdgeAB, EdgeBC, EdgeCA, VertexA, VertexB, VertexC };

struct TriangleHit {
    Vec3 point;
    Feature feature;
};

// Closest point on triangle abc to p, with the Voronoi region it falls in.
TriangleHit closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return {a, Feature::VertexA};

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return {b, Feature::VertexB};

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return {a + v * ab, Feature::EdgeAB};
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return {c, Feature::VertexC};

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return {a + w * ac, Feature::EdgeCA};
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {b + w * (c - b), Feature::EdgeBC};
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return {a + ab * v + ac * w, Feature::Face};
}

double solid_angle(const Vec3& p, const Vec3& a0, const Vec3& b0, const Vec3& c0) {
    const Vec3 a = a0 - p;
    const Vec3 b = b0 - p;
    const Vec3 c = c0 - p;
    const double la = a.norm();
    const double lb = b.norm();
    const double lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    return 2.0 * std::atan2(num, den);
}

double orient2d(double ax, double ay, double bx, double by, double sx, double sy) {
    return (bx - ax) * (sy - ay) - (by - ay) * (sx - ax);
}

}  // namespace

std::optional<double> line_triangle_crossing(int axis, double a, double b, const Vec3& p0,
                                             const Vec3& p1, const Vec3& p2) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const std::array<const Vec3*, 3> pts{&p0, &p1, &p2};

    const double area2 = orient2d(p0[u], p0[v], p1[u], p1[v], p2[u], p2[v]);
    if (area2 == 0.0) return std::nullopt;
    const double flip = area2 > 0.0 ? 1.0 : -1.0;

    std::array<double, 3> w{};
    for (int e = 0; e < 3; ++e) {
        // Edge opposite vertex e, evaluated with endpoints in canonical order
        // so both triangles sharing it compute bit-identical magnitudes.
        const Vec3& from = *pts[(e + 1) % 3];
        const Vec3& to = *pts[(e + 2) % 3];
        const bool swapped = std::make_pair(to[u], to[v]) < std::make_pair(from[u], from[v]);
        const Vec3& lo = swapped ? to : from;
        const Vec3& hi = swapped ? from : to;
        double we = orient2d(lo[u], lo[v], hi[u], hi[v], a, b);
        if (swapped) we = -we;
        we *= flip;
        if (we < 0.0) return std::nullopt;
        if (we == 0.0) {
            // Direction of this edge in the counter-clockwise orientation.
            double du = to[u] - from[u];
            double dv = to[v] - from[v];
            if (flip < 0.0) {
                du = -du;
                dv = -dv;
            }
            const bool owned = dv < 0.0 || (dv == 0.0 && du < 0.0);
            if (!owned) return std::nullopt;
        }
        w[e] = we;
    }
    const double sum = w[0] + w[1] + w[2];
    if (sum <= 0.0) return std::nullopt;
    return (w[0] * p0[axis] + w[1] * p1[axis] + w[2] * p2[axis]) / sum;
}

MeshQuery::MeshQuery(TriMesh mesh) : mesh_(std::move(mesh)) {
    mesh_.validate();
    if (mesh_.faces.empty()) fail(ErrorCode::DegenerateMesh, "mesh query on an empty mesh");
    watertight_ = is_watertight(mesh_);

    const std::size_t nf = mesh_.faces.size();
    face_normals_.resize(nf);
    vertex_normals_.assign(mesh_.vertices.size(), Vec3::Zero());
    edge_ids_.resize(nf);
    std::unordered_map<std::uint64_t, std::uint32_t> edge_lookup;
    edge_lookup.reserve(nf * 2);
    double signed_volume = 0.0;

    for (std::size_t f = 0; f < nf; ++f) {
        const Vec3& a = mesh_.corner(f, 0);
        const Vec3& b = mesh_.corner(f, 1);
        const Vec3& c = mesh_.corner(f, 2);
        signed_volume += a.dot(b.cross(c));
        const Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        face_normals_[f] = len > 0.0 ? Vec3(n / len) : Vec3::Zero();

        for (int k = 0; k < 3; ++k) {
            const Vec3& p = mesh_.corner(f, k);
            const Vec3 e1 = mesh_.corner(f, (k + 1) % 3) - p;
            const Vec3 e2 = mesh_.corner(f, (k + 2) % 3) - p;
            const double l1 = e1.norm();
            const double l2 = e2.norm();
            if (l1 > 0.0 && l2 > 0.0) {
                const double cosang = std::clamp(e1.dot(e2) / (l1 * l2), -1.0, 1.0);
                vertex_normals_[mesh_.faces[f][k]] += std::acos(cosang) * face_normals_[f];
            }
            const auto v0 = mesh_.faces[f][k];
            const auto v1 = mesh_.faces[f][(k + 1) % 3];
            const std::uint64_t key = (std::uint64_t(std::min(v0, v1)) << 32) | std::max(v0, v1);
            auto [it, inserted] = edge_lookup.emplace(key, std::uint32_t(edge_normals_.size()));
            if (inserted) edge_normals_.push_back(Vec3::Zero());
            edge_normals_[it->second] += face_normals_[f];
            edge_ids_[f][k] = it->second;  // edge k runs from corner k to corner k+1
        }
    }
    orientation_ = signed_volume < 0.0 ? -1.0 : 1.0;

    order_.resize(nf);
    for (std::uint32_t i = 0; i < nf; ++i) order_[i] = i;
    nodes_.reserve(2 * nf / 2 + 1);
    build(0, std::uint32_t(nf));
}

std::uint32_t MeshQuery::build(std::uint32_t begin, std::uint32_t end) {
    const auto index = std::uint32_t(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    Aabb centroid_box;
    for (std::uint32_t i = begin; i < end; ++i) {
        const auto f = order_[i];
        for (int k = 0; k < 3; ++k) box.extend(mesh_.corner(f, k));
        centroid_box.extend((mesh_.corner(f, 0) + mesh_.corner(f, 1) + mesh_.corner(f, 2)) / 3.0);
    }
    nodes_[index].box = box;
    if (end - begin <= 4) {
        nodes_[index].leaf = true;
        nodes_[index].left = begin;
        nodes_[index].right = end - begin;
        return index;
    }
    int axis = 0;
    centroid_box.extent().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    auto centroid = [&](std::uint32_t f) {
        return mesh_.corner(f, 0)[axis] + mesh_.corner(f, 1)[axis] + mesh_.corner(f, 2)[axis];
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t x, std::uint32_t y) {
                         const double cx = centroid(x);
                         const double cy = centroid(y);
                         return cx < cy || (cx == cy && x < y);
                     });
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

ClosestPoint MeshQuery::closest(const Vec3& p) const {
    ClosestPoint best;
    best.squared_distance = std::numeric_limits<double>::infinity();
    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (node.box.squared_distance(p) >= best.squared_distance) continue;
        if (node.leaf) {
            for (std::uint32_t i = node.left; i < node.left + node.right; ++i) {
                const auto f = order_[i];
                const TriangleHit hit = closest_on_triangle(p, mesh_.corner(f, 0), mesh_.corner(f, 1), mesh_.corner(f, 2));
                const double d2 = (hit.point - p).squaredNorm();
                if (d2 < best.squared_distance) best = {hit.point, f, d2};
            }
            continue;
        }
        const double dl = nodes_[node.left].box.squared_distance(p);
        const double dr = nodes_[node.right].box.squared_distance(p);
        if (dl < dr) {
            stack[top++] = node.right;
            stack[top++] = node.left;
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return best;
}

double MeshQuery::unsigned_distance(const Vec3& p) const { return std::sqrt(closest(p).squared_distance); }

double MeshQuery::pseudonormal_sign(const Vec3& p, const ClosestPoint& cp) const {
    const auto& f = mesh_.faces[cp.face];
    const TriangleHit hit = closest_on_triangle(p, mesh_.vertices[f[0]], mesh_.vertices[f[1]], mesh_.vertices[f[2]]);
    Vec3 normal;
    switch (hit.feature) {
        case Feature::Face: normal = face_normals_[cp.face]; break;
        case Feature::EdgeAB: normal = edge_normals_[edge_ids_[cp.face][0]]; break;
        case Feature::EdgeBC: normal = edge_normals_[edge_ids_[cp.face][1]]; break;
        case Feature::EdgeCA: normal = edge_normals_[edge_ids_[cp.face][2]]; break;
        case Feature::VertexA: normal = vertex_normals_[f[0]]; break;
        case Feature::VertexB: normal = vertex_normals_[f[1]]; break;
        case Feature::VertexC: normal = vertex_normals_[f[2]]; break;
    }
    const Vec3 offset = p - cp.point;
    const double dot = offset.dot(normal);
    const double scale = offset.norm() * normal.norm();
    if (!(std::abs(dot) > 1e-9 * scale)) return 0.0;  // ambiguous
    return dot > 0.0 ? orientation_ : -orientation_;
}

double MeshQuery::signed_distance(const Vec3& p) const {
    if (!watertight_) fail(ErrorCode::NonWatertight, "signed distance requires a watertight mesh");
    const ClosestPoint cp = closest(p);
    const double d = std::sqrt(cp.squared_distance);
    if (d == 0.0) return 0.0;
    double sign = pseudonormal_sign(p, cp);
    if (sign == 0.0) sign = winding_number(p) > 0.5 ? -1.0 : 1.0;
    return sign * d;
}

double MeshQuery::winding_number(const Vec3& p) const {
    double total = 0.0;
    for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
        total += solid_angle(p, mesh_.corner(f, 0), mesh_.corner(f, 1), mesh_.corner(f, 2));
    }
    return orientation_ * total / (4.0 * std::numbers::pi);
}

bool MeshQuery::inside_by_parity(const Vec3& p) const {
    std::size_t crossings = 0;
    for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
        const auto x = line_triangle_crossing(0, p.y(), p.z(), mesh_.corner(f, 0), mesh_.corner(f, 1), mesh_.corner(f, 2));
        if (x && *x > p.x()) ++crossings;
    }
    return crossings % 2 == 1;
}

double signed_distance(const TriMesh& mesh, const Vec3& p) { return MeshQuery(mesh).signed_distance(p); }

}  // namespace inrshape
