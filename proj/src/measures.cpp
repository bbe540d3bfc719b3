#include "inrshape/measures.hpp"

#include "inrshape/errors.hpp"
#include "inrshape/mesh_query.hpp"
#include "inrshape/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace inrshape {

namespace {

void require_watertight(const TriMesh& mesh, const char* what) {
    if (!is_watertight(mesh)) fail(ErrorCode::NonWatertight, std::string(what) + " requires a watertight mesh");
}

// Sorted crossings of the line running along `axis` through `fixed` with the
// mesh. `candidates` restricts the faces tested.
std::vector<double> line_crossings(const TriMesh& mesh, int axis, const Vec3& fixed,
                                   std::span<const std::uint32_t> candidates) {
    const double a = fixed[(axis + 1) % 3];
    const double b = fixed[(axis + 2) % 3];
    std::vector<double> xs;
    for (auto f : candidates) {
        if (auto x = line_triangle_crossing(axis, a, b, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2))) {
            xs.push_back(*x);
        }
    }
    std::sort(xs.begin(), xs.end());
    return xs;
}

// Buckets faces by the footprint of their projection onto the plane spanned by
// the two axes other than `axis`, over an n_u x n_v lattice of line positions.
struct ColumnBins {
    int axis;
    double u0, du, v0, dv;
    std::size_t nu, nv;
    std::vector<std::vector<std::uint32_t>> bins;

    ColumnBins(const TriMesh& mesh, int axis_, double u0_, double du_, std::size_t nu_, double v0_,
               double dv_, std::size_t nv_)
        : axis(axis_), u0(u0_), du(du_), v0(v0_), dv(dv_), nu(nu_), nv(nv_), bins(nu_ * nv_) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        for (std::uint32_t f = 0; f < mesh.faces.size(); ++f) {
            double ulo = INFINITY, uhi = -INFINITY, vlo = INFINITY, vhi = -INFINITY;
            for (int k = 0; k < 3; ++k) {
                const Vec3& p = mesh.corner(f, k);
                ulo = std::min(ulo, p[u]);
                uhi = std::max(uhi, p[u]);
                vlo = std::min(vlo, p[v]);
                vhi = std::max(vhi, p[v]);
            }
            // Line positions are u0 + i * du; include every line inside the footprint.
            const auto first = [](double lo, double origin, double step) {
                return std::max(0.0, std::ceil((lo - origin) / step - 1e-9));
            };
            const auto last = [](double hi, double origin, double step, std::size_t n) {
                return std::min(double(n) - 1.0, std::floor((hi - origin) / step + 1e-9));
            };
            const double i0 = first(ulo, u0, du), i1 = last(uhi, u0, du, nu);
            const double j0 = first(vlo, v0, dv), j1 = last(vhi, v0, dv, nv);
            for (double j = j0; j <= j1; j += 1.0) {
                for (double i = i0; i <= i1; i += 1.0) {
                    bins[std::size_t(j) * nu + std::size_t(i)].push_back(f);
                }
            }
        }
    }

    Vec3 line_point(std::size_t i, std::size_t j, double along) const {
        Vec3 p;
        p[axis] = along;
        p[(axis + 1) % 3] = u0 + double(i) * du;
        p[(axis + 2) % 3] = v0 + double(j) * dv;
        return p;
    }
    std::span<const std::uint32_t> at(std::size_t i, std::size_t j) const { return bins[j * nu + i]; }
};

}  // namespace

double mesh_volume(const TriMesh& mesh) {
    require_watertight(mesh, "mesh_volume");
    double six_volume = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        six_volume += mesh.corner(f, 0).dot(mesh.corner(f, 1).cross(mesh.corner(f, 2)));
    }
    return std::abs(six_volume) / 6.0;
}

double cross_section_area(const TriMesh& mesh, int axis, double offset, SliceMethod method,
                          std::size_t voxel_resolution) {
    if (axis < 0 || axis > 2) fail(ErrorCode::Parameter, "plane axis must be 0, 1 or 2");
    require_watertight(mesh, "cross_section_area");
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;

    if (method == SliceMethod::Exact) {
        // Each face crossing the plane contributes one segment, directed from the
        // edge going below->above to the edge going above->below. Neighbouring
        // faces traverse shared crossings oppositely, so segments chain into
        // closed loops and the shoelace sum is the enclosed area.
        double twice_area = 0.0;
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            std::array<bool, 3> above{};
            for (int k = 0; k < 3; ++k) above[std::size_t(k)] = mesh.corner(f, k)[axis] >= offset;
            if (above[0] == above[1] && above[1] == above[2]) continue;
            Vec3 start = Vec3::Zero(), end = Vec3::Zero();
            for (int k = 0; k < 3; ++k) {
                const int n = (k + 1) % 3;
                if (above[std::size_t(k)] == above[std::size_t(n)]) continue;
                // Interpolate from the lower vertex index for bitwise agreement.
                const bool fwd = mesh.faces[f][std::size_t(k)] < mesh.faces[f][std::size_t(n)];
                const Vec3& p = mesh.corner(f, fwd ? k : n);
                const Vec3& q = mesh.corner(f, fwd ? n : k);
                const double t = (offset - p[axis]) / (q[axis] - p[axis]);
                const Vec3 x = p + t * (q - p);
                if (above[std::size_t(n)]) {
                    start = x;
                } else {
                    end = x;
                }
            }
            twice_area += start[u] * end[v] - end[u] * start[v];
        }
        return std::abs(0.5 * twice_area);
    }

    // Voxel method: scanlines along u inside the plane, spaced evenly in v.
    const Aabb box = bounding_box(mesh);
    if (offset <= box.lo[axis] || offset >= box.hi[axis]) return 0.0;
    const std::size_t n = std::max<std::size_t>(voxel_resolution, 2);
    const double dv = (box.hi[v] - box.lo[v]) / double(n);
    std::vector<std::uint32_t> all(mesh.faces.size());
    for (std::uint32_t f = 0; f < all.size(); ++f) all[f] = f;
    double area = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Vec3 fixed = Vec3::Zero();
        fixed[axis] = offset;
        fixed[v] = box.lo[v] + (double(j) + 0.5) * dv;
        const auto xs = line_crossings(mesh, u, fixed, all);
        for (std::size_t c = 0; c + 1 < xs.size(); c += 2) area += (xs[c + 1] - xs[c]) * dv;
    }
    return area;
}

MirrorIou mirror_iou(const TriMesh& mesh, int axis, double offset, std::size_t voxel_resolution) {
    if (axis < 0 || axis > 2) fail(ErrorCode::Parameter, "plane axis must be 0, 1 or 2");
    require_watertight(mesh, "mirror_iou");
    const std::size_t n = voxel_resolution;
    if (n < 2) fail(ErrorCode::Parameter, "mirror_iou resolution too small");
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;

    const Aabb box = bounding_box(mesh);
    const double half = std::max(offset - box.lo[axis], box.hi[axis] - offset) * (1.0 + 1e-9) + 1e-12;
    const double h = 2.0 * half / double(n);
    const double pad_u = 1e-9 * (box.hi[u] - box.lo[u]) + 1e-12;
    const double pad_v = 1e-9 * (box.hi[v] - box.lo[v]) + 1e-12;
    const double du = (box.hi[u] - box.lo[u] + 2 * pad_u) / double(n);
    const double dv = (box.hi[v] - box.lo[v] + 2 * pad_v) / double(n);
    const ColumnBins bins(mesh, axis, box.lo[u] - pad_u + 0.5 * du, du, n, box.lo[v] - pad_v + 0.5 * dv, dv, n);

    std::size_t inter = 0, uni = 0, left = 0, right = 0;
    std::vector<bool> occ(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto cand = bins.at(i, j);
            if (cand.empty()) continue;
            const auto xs = line_crossings(mesh, axis, bins.line_point(i, j, 0.0), cand);
            if (xs.size() < 2) continue;
            std::fill(occ.begin(), occ.end(), false);
            for (std::size_t c = 0; c + 1 < xs.size(); c += 2) {
                // Cells whose centres lie inside [xs[c], xs[c+1]].
                const double lo = (xs[c] - (offset - half)) / h - 0.5;
                const double hi = (xs[c + 1] - (offset - half)) / h - 0.5;
                const auto first = std::size_t(std::max(0.0, std::ceil(lo)));
                const double last = std::min(double(n) - 1.0, std::floor(hi));
                for (std::size_t s = first; double(s) <= last; ++s) occ[s] = true;
            }
            for (std::size_t s = 0; s < n / 2; ++s) {
                const bool a = occ[s];
                const bool b = occ[n - 1 - s];
                left += a;
                right += b;
                inter += a && b;
                uni += a || b;
            }
        }
    }
    MirrorIou result;
    if (left == 0 || right == 0) {
        result.empty_side = true;
        result.iou = 0.0;
        return result;
    }
    result.iou = double(inter) / double(uni);
    return result;
}

double chamfer_distance(const TriMesh& a, const TriMesh& b, const ChamferOptions& options) {
    const auto pa = sample_surface(a, options.samples, options.seed_a);
    const auto pb = sample_surface(b, options.samples, options.seed_b);
    const MeshQuery qa(a);
    const MeshQuery qb(b);
    // Distances at rounding level mean the sample lies on the other surface.
    auto directed = [](const std::vector<Vec3>& points, const MeshQuery& q, const TriMesh& target) {
        const Aabb box = bounding_box(target);
        const double tolerance = 1e-12 * std::max(1.0, (box.hi - box.lo).norm());
        double total = 0.0;
        for (const auto& p : points) {
            const double d = q.unsigned_distance(p);
            total += d > tolerance ? d : 0.0;
        }
        return total / double(points.size());
    };
    return 0.5 * (directed(pa, qb, b) + directed(pb, qa, a));
}

}  // namespace inrshape
