#pragma once

#include <filesystem>

#include "digitforge/trimesh.hpp"

namespace df {

// Binary little-endian STL, 84 + 50*count bytes, attribute word zero, normals
// recomputed from winding. Byte output is deterministic for identical input.
void write_stl(const TriMesh& mesh, const std::filesystem::path& path);

// Binary STL only; the triangle soup is welded at exact coordinate equality.
TriMesh read_stl(const std::filesystem::path& path);

}  // namespace df
