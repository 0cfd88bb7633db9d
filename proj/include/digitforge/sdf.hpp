#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>

#include "digitforge/bvh.hpp"
#include "digitforge/trimesh.hpp"

namespace df {

using ScalarField = std::function<double(const Vec3&)>;

// Signed distance to a closed mesh, negative inside. Sign comes from the
// angle-weighted pseudonormal of the nearest feature (Baerentzen & Aanaes).
class MeshSdf {
 public:
  explicit MeshSdf(TriMesh mesh);  // throws NonClosedInput

  // `upper_hint` is a pruning hint for the nearest-point search (e.g. the
  // previous scanline value plus the step); correctness does not depend on it.
  double signed_distance(const Vec3& q,
                         double upper_hint = std::numeric_limits<double>::max()) const;
  double operator()(const Vec3& q) const { return signed_distance(q); }

  const TriMesh& mesh() const { return mesh_; }
  const TriBvh& bvh() const { return bvh_; }

 private:
  TriMesh mesh_;
  TriBvh bvh_;
  std::vector<double> face_quality_;
  mutable std::vector<int> candidates_;
  std::vector<Vec3> face_normals_;
  std::vector<Vec3> vertex_normals_;
  std::unordered_map<uint64_t, Vec3> edge_normals_;
};

// Analytic primitives (exact distances).
double sdf_sphere(const Vec3& p, const Vec3& center, double r);
double sdf_box(const Vec3& p, const Vec3& center, const Vec3& half_extent);
double sdf_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r);
double sdf_capped_cylinder(const Vec3& p, const Vec3& a, const Vec3& b, double r);
double sdf_rounded_box(const Vec3& p, const Vec3& center, const Vec3& half_extent, double round);

}  // namespace df
