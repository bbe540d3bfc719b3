#include "inrshape/marching_cubes.hpp"

#include "inrshape/errors.hpp"
#include "mc_tables.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace inrshape {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

ScalarGrid::ScalarGrid(std::array<std::size_t, 3> res, const Vec3& origin_, const Vec3& spacing_, double fill)
    : resolution(res), origin(origin_), spacing(spacing_), values(res[0] * res[1] * res[2], fill) {}

ScalarGrid ScalarGrid::unit_cube_cell_centers(std::size_t n) {
    const double h = 1.0 / double(n);
    return ScalarGrid({n, n, n}, Vec3::Constant(0.5 * h), Vec3::Constant(h));
}

ScalarGrid ScalarGrid::padded(double value) const {
    ScalarGrid out({resolution[0] + 2, resolution[1] + 2, resolution[2] + 2}, origin - spacing, spacing, value);
    for (std::size_t k = 0; k < resolution[2]; ++k) {
        for (std::size_t j = 0; j < resolution[1]; ++j) {
            for (std::size_t i = 0; i < resolution[0]; ++i) out.at(i + 1, j + 1, k + 1) = at(i, j, k);
        }
    }
    return out;
}

void ScalarGrid::validate() const {
    if (values.size() != resolution[0] * resolution[1] * resolution[2]) {
        fail(ErrorCode::Shape, "grid value count does not match its resolution");
    }
    if ((spacing.array() <= 0.0).any()) fail(ErrorCode::Parameter, "grid spacing must be positive");
    for (double v : values) {
        if (!std::isfinite(v)) fail(ErrorCode::Numerical, "grid contains non-finite values");
    }
}

MarchingCubesResult marching_cubes(const ScalarGrid& grid, double level) {
    grid.validate();
    MarchingCubesResult result;
    const auto [nx, ny, nz] = grid.resolution;
    if (nx < 2 || ny < 2 || nz < 2) {
        result.empty = true;
        return result;
    }

    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    edge_vertex.reserve(nx * ny * 4);
    TriMesh& mesh = result.mesh;

    auto vertex_on_edge = [&](std::size_t i, std::size_t j, std::size_t k, int edge) -> std::uint32_t {
        const int* ca = kCorner[kEdgeCorners[edge][0]];
        const int* cb = kCorner[kEdgeCorners[edge][1]];
        // Key the edge by its lower endpoint so neighbouring cells agree.
        const bool a_low = (ca[0] + ca[1] + ca[2]) < (cb[0] + cb[1] + cb[2]);
        const int* lo = a_low ? ca : cb;
        const int* hi = a_low ? cb : ca;
        const int axis = hi[0] != lo[0] ? 0 : (hi[1] != lo[1] ? 1 : 2);
        const std::size_t li = i + std::size_t(lo[0]);
        const std::size_t lj = j + std::size_t(lo[1]);
        const std::size_t lk = k + std::size_t(lo[2]);
        const std::uint64_t key = std::uint64_t(grid.index(li, lj, lk)) * 3 + std::uint64_t(axis);
        if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;

        const std::size_t hi_i = i + std::size_t(hi[0]);
        const std::size_t hi_j = j + std::size_t(hi[1]);
        const std::size_t hi_k = k + std::size_t(hi[2]);
        const double v0 = grid.at(li, lj, lk);
        const double v1 = grid.at(hi_i, hi_j, hi_k);
        const double t = v1 != v0 ? (level - v0) / (v1 - v0) : 0.5;
        const Vec3 p0 = grid.position(li, lj, lk);
        const Vec3 p1 = grid.position(hi_i, hi_j, hi_k);
        mesh.vertices.push_back(p0 + t * (p1 - p0));
        const auto idx = std::uint32_t(mesh.vertices.size() - 1);
        edge_vertex.emplace(key, idx);
        return idx;
    };

    for (std::size_t k = 0; k + 1 < nz; ++k) {
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            for (std::size_t i = 0; i + 1 < nx; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    const double v = grid.at(i + std::size_t(kCorner[c][0]), j + std::size_t(kCorner[c][1]),
                                             k + std::size_t(kCorner[c][2]));
                    if (v < level) cube |= 1 << c;
                }
                if (detail::kEdgeTable[cube] == 0) continue;
                std::array<std::uint32_t, 12> verts{};
                for (int e = 0; e < 12; ++e) {
                    if (detail::kEdgeTable[cube] & (1 << e)) verts[std::size_t(e)] = vertex_on_edge(i, j, k, e);
                }
                const int* tri = detail::kTriTable[cube];
                for (int t = 0; tri[t] != -1; t += 3) {
                    // The table winds triangles inward for this inside convention.
                    mesh.faces.push_back({verts[std::size_t(tri[t])], verts[std::size_t(tri[t + 2])],
                                          verts[std::size_t(tri[t + 1])]});
                }
            }
        }
    }
    result.empty = mesh.faces.empty();
    return result;
}

void write_grid(const std::filesystem::path& path, const ScalarGrid& grid) {
    grid.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    for (double v : grid.values) {
        const float f = static_cast<float>(v);
        char bytes[4];
        std::memcpy(bytes, &f, 4);  // host is little-endian
        out.write(bytes, 4);
    }
    nlohmann::json meta = {
        {"format", "float32-le"},
        {"resolution", {grid.resolution[0], grid.resolution[1], grid.resolution[2]}},
        {"origin", {grid.origin.x(), grid.origin.y(), grid.origin.z()}},
        {"spacing", {grid.spacing.x(), grid.spacing.y(), grid.spacing.z()}},
        {"layout", "x-fastest"},
    };
    std::ofstream side(path.string() + ".json");
    if (!side) fail(ErrorCode::Io, "cannot write grid sidecar for " + path.string());
    side << meta.dump(2) << '\n';
}

ScalarGrid read_grid(const std::filesystem::path& path) {
    std::ifstream side(path.string() + ".json");
    if (!side) fail(ErrorCode::Io, "missing grid sidecar for " + path.string());
    const auto meta = nlohmann::json::parse(side);
    ScalarGrid grid;
    for (int k = 0; k < 3; ++k) {
        grid.resolution[std::size_t(k)] = meta.at("resolution").at(k).get<std::size_t>();
        grid.origin[k] = meta.at("origin").at(k).get<double>();
        grid.spacing[k] = meta.at("spacing").at(k).get<double>();
    }
    const std::size_t n = grid.resolution[0] * grid.resolution[1] * grid.resolution[2];
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    grid.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        float f = 0.0f;
        if (!in.read(reinterpret_cast<char*>(&f), 4)) fail(ErrorCode::Io, "grid file truncated: " + path.string());
        grid.values[i] = f;
    }
    return grid;
}

}  // namespace inrshape
