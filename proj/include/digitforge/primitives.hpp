#pragma once

#include "digitforge/trimesh.hpp"

namespace df {

TriMesh make_box(const Vec3& min, const Vec3& max);
TriMesh make_cylinder(const Vec3& base_center, const Vec3& axis, double radius, double height,
                      int segments = 48);
// Cylinder with a radial key rib running the full height; the rib breaks the
// rotational symmetry of a plain cylinder. The rib points along `rib_dir`
// (projected perpendicular to the axis).
TriMesh make_keyed_cylinder(const Vec3& base_center, const Vec3& axis, double radius,
                            double height, double rib_width, double rib_depth,
                            const Vec3& rib_dir, int segments = 48);
TriMesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments = 32,
                     int rings = 16);
TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions = 3);

// Orthonormal frame completion: returns (u, v) with u x v = w for unit w.
std::pair<Vec3, Vec3> perpendicular_frame(const Vec3& w);

}  // namespace df
