#pragma once

#include "digitforge/isosurface.hpp"
#include "digitforge/sdf.hpp"
#include "digitforge/trimesh.hpp"

namespace df {

enum class BoolKind { Union, Difference, Intersection };

// Regularized solid boolean. Exact paths (identical inputs, disjoint bounding
// boxes, empty operands) are resolved combinatorially; everything else is
// re-meshed from the combined signed distance fields at the given voxel size.
TriMesh boolean_op(const TriMesh& a, const TriMesh& b, BoolKind kind,
                   double voxel = defaults::boolean_voxel_mm);

// Iso-surface of (signed distance to mesh) - distance, re-extracted at the
// given voxel size. Positive distance dilates, negative erodes.
TriMesh offset_mesh(const TriMesh& mesh, double distance, double voxel);

double intersection_volume(const TriMesh& a, const TriMesh& b,
                           double voxel = defaults::boolean_voxel_mm);

// Lipschitz-bounded wrapper that feeds the previous query back in as a search
// bound; meant for spatially coherent sampling like grid scans.
class CoherentSdf {
 public:
  explicit CoherentSdf(const MeshSdf& s) : sdf_(&s) {}
  double operator()(const Vec3& q) const {
    double hint = have_last_ ? std::abs(last_value_) + (q - last_query_).norm() + 1e-9
                             : std::numeric_limits<double>::max();
    double v = sdf_->signed_distance(q, hint);
    last_query_ = q;
    last_value_ = v;
    have_last_ = true;
    return v;
  }

 private:
  const MeshSdf* sdf_;
  mutable Vec3 last_query_ = Vec3::Zero();
  mutable double last_value_ = 0.0;
  mutable bool have_last_ = false;
};

}  // namespace df
