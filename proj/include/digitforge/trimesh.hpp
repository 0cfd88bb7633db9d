#pragma once

#include <array>
#include <vector>

#include "digitforge/common.hpp"

namespace df {

// Rigid pose: v -> R v + t, det(R) = +1.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& v) const { return rotation * v + translation; }
  RigidTransform then(const RigidTransform& outer) const;
  RigidTransform inverse() const;
  bool valid() const;
  static RigidTransform identity() { return {}; }
};

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  Plane() = default;
  Plane(const Vec3& p, const Vec3& n);
  double signed_distance(const Vec3& v) const { return normal.dot(v - point); }
  Vec3 reflect(const Vec3& v) const { return v - 2.0 * signed_distance(v) * normal; }
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 max = Vec3::Constant(std::numeric_limits<double>::lowest());

  void expand(const Vec3& p);
  void expand(const Aabb& b);
  Aabb padded(double d) const;
  bool valid() const { return (min.array() <= max.array()).all(); }
  bool disjoint(const Aabb& b) const;
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 size() const { return max - min; }
};

// Indexed triangle surface in millimeters.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  Aabb bounds() const;
};

// Builds a mesh, dropping triangles with area < tol::min_triangle_area.
// The dropped count is reported through `dropped` when non-null.
TriMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                  int* dropped = nullptr);

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t);
TriMesh mirror_mesh(const TriMesh& mesh, const Plane& plane);
TriMesh append_meshes(const TriMesh& a, const TriMesh& b);

double signed_volume(const TriMesh& mesh);  // throws NonClosedInput
double surface_area(const TriMesh& mesh);

bool is_closed(const TriMesh& mesh);
bool is_edge_manifold(const TriMesh& mesh);

std::vector<TriMesh> connected_components(const TriMesh& mesh);
TriMesh drop_small_components(const TriMesh& mesh, double min_volume_mm3);

Vec3 area_centroid(const TriMesh& mesh);
Vec3 triangle_normal(const TriMesh& mesh, int tri);  // unit, zero if degenerate

}  // namespace df
