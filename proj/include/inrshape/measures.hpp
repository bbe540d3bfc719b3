#pragma once

#include "inrshape/mesh.hpp"

#include <cstdint>

namespace inrshape {

/// Enclosed volume by signed tetrahedra, reported positive whatever the winding.
/// Throws ErrorCode::NonWatertight on open meshes.
double mesh_volume(const TriMesh& mesh);

enum class SliceMethod { Exact, Voxel };

/// Area of the solid's intersection with the plane {x[axis] = offset}.
/// Exact slicing sums the signed area of the oriented cut segments; Voxel
/// integrates crossing intervals along `voxel_resolution` in-plane scanlines.
double cross_section_area(const TriMesh& mesh, int axis, double offset,
                          SliceMethod method = SliceMethod::Exact,
                          std::size_t voxel_resolution = 256);

struct MirrorIou {
    double iou = 0.0;
    bool empty_side = false;  // one half had no occupied voxels; iou is 0
};

/// Symmetry score: voxelize interior occupancy on a grid centred on the plane,
/// reflect one half across it and return the IoU with the other half.
MirrorIou mirror_iou(const TriMesh& mesh, int axis, double offset, std::size_t voxel_resolution = 128);

struct ChamferOptions {
    std::size_t samples = 30000;
    std::uint64_t seed_a = 1;
    std::uint64_t seed_b = 2;
};

/// Mean of the two directed mean sample-to-surface distances. Swapping the
/// meshes together with their seeds gives the identical value.
double chamfer_distance(const TriMesh& a, const TriMesh& b, const ChamferOptions& options = {});

}  // namespace inrshape
