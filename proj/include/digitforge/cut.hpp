#pragma once

#include "digitforge/trimesh.hpp"

namespace df {

// Keeps the half-space on the opposite side of the plane normal. With `cap`
// the cut cross-section is triangulated so a closed input stays closed (the
// input must be closed in that case). Crossing edges are split at exact
// plane intersections shared between neighbouring triangles.
TriMesh cut_with_plane(const TriMesh& mesh, const Plane& plane, bool cap);

}  // namespace df
