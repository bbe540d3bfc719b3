#pragma once

#include "inrshape/mesh.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace inrshape {

/// Scalar samples on a regular lattice; x varies fastest.
struct ScalarGrid {
    std::array<std::size_t, 3> resolution{0, 0, 0};
    Vec3 origin = Vec3::Zero();
    Vec3 spacing = Vec3::Ones();
    std::vector<double> values;

    ScalarGrid() = default;
    ScalarGrid(std::array<std::size_t, 3> res, const Vec3& origin, const Vec3& spacing, double fill = 0.0);

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return i + resolution[0] * (j + resolution[1] * k);
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return values[index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
    Vec3 position(std::size_t i, std::size_t j, std::size_t k) const {
        return origin + spacing.cwiseProduct(Vec3(double(i), double(j), double(k)));
    }

    /// n^3 samples at the cell centers of the unit cube.
    static ScalarGrid unit_cube_cell_centers(std::size_t n);

    /// Copy surrounded by one extra layer of nodes holding `value`.
    ScalarGrid padded(double value) const;

    void validate() const;
};

struct MarchingCubesResult {
    TriMesh mesh;
    bool empty = false;  // no crossing of the level anywhere in the grid
};

/// Isosurface at `level` with linear edge interpolation. Values below the level
/// are inside; faces are oriented outward. Vertices are shared between
/// neighbouring cells, so closed level sets give watertight meshes.
MarchingCubesResult marching_cubes(const ScalarGrid& grid, double level = 0.0);

/// Raw little-endian float32 values plus a JSON sidecar `<path>.json`
/// holding resolution, origin and spacing.
void write_grid(const std::filesystem::path& path, const ScalarGrid& grid);
ScalarGrid read_grid(const std::filesystem::path& path);

}  // namespace inrshape
