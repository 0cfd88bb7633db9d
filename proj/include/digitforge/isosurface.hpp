#pragma once

#include "digitforge/sdf.hpp"
#include "digitforge/trimesh.hpp"
#include "digitforge/volume.hpp"

namespace df {

struct IsoParams {
  double iso_value = defaults::skin_iso_hu;            // HU
  double min_component_volume = defaults::min_component_mm3;  // mm^3
};

// Watertight iso-surface of a sample grid. `position` maps lattice indices to
// world mm; `values` is x-fastest. The region with value > iso is the inside;
// triangle normals point toward lower values. Samples exactly at the iso value
// are nudged up by tol::iso_nudge so the result is deterministic.
TriMesh extract_grid_isosurface(const Vec3i& dims,
                                const std::function<Vec3(int, int, int)>& position,
                                const std::vector<double>& values, double iso);

TriMesh extract_isosurface(const VoxelVolume& volume, const IsoParams& params);

// Zero iso-surface of an analytic signed distance field (negative inside).
// The sampling grid covers `bounds` padded by one voxel.
TriMesh mesh_from_analytic_sdf(const ScalarField& field, const Aabb& bounds, double voxel);

}  // namespace df
