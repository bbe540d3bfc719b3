#pragma once

#include "inrshape/mesh.hpp"

#include <filesystem>
#include <string>

namespace inrshape {

/// ASCII OBJ with `v` and `f` records. Coordinates are printed with 17
/// significant digits so a write/read cycle is lossless.
std::string format_obj(const TriMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

/// Reads `v`/`f` records; polygons are fan-triangulated, other records ignored.
TriMesh parse_obj(const std::string& text);
TriMesh read_obj(const std::filesystem::path& path);

/// Binary STL. Coincident vertices are welded so the result is indexed.
TriMesh read_stl_binary(const std::filesystem::path& path);

/// Dispatches on the file extension (.obj or .stl).
TriMesh read_mesh(const std::filesystem::path& path);

}  // namespace inrshape
