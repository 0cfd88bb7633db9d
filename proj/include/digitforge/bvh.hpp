#pragma once

#include <optional>
#include <vector>

#include "digitforge/trimesh.hpp"

namespace df {

// Axis-aligned BVH over the triangles of one mesh. Query-only after build;
// safe for concurrent const use.
class TriBvh {
 public:
  struct ClosestHit {
    double dist = 0.0;
    Vec3 point = Vec3::Zero();
    int triangle = -1;
  };
  struct RayHit {
    double t = 0.0;
    int triangle = -1;
  };

  TriBvh() = default;
  explicit TriBvh(const TriMesh& mesh);

  bool empty() const { return nodes_.empty(); }

  // Nearest point on the mesh. `upper_bound` prunes the search; if nothing is
  // closer than the bound the true closest is still returned (the bound is a
  // hint, the search falls back to the best found).
  ClosestHit closest_point(const Vec3& q,
                           double upper_bound = std::numeric_limits<double>::max()) const;

  // All triangles whose closest point to q lies within `radius`.
  void collect_within(const Vec3& q, double radius, std::vector<int>& out) const;

  // Number of surface crossings along q + t*dir, t > 0. Returns nullopt when
  // a hit grazes an edge or a near-degenerate triangle, i.e. the count cannot
  // be trusted and the caller should retry with another direction.
  std::optional<int> ray_parity(const Vec3& q, const Vec3& dir) const;

  // First intersection along q + t*dir, t in (t_min, t_max).
  std::optional<RayHit> first_hit(const Vec3& q, const Vec3& dir, double t_min = 0.0,
                                  double t_max = std::numeric_limits<double>::max()) const;

  // Number of pairs of non-adjacent triangles that geometrically intersect.
  static long self_intersection_count(const TriMesh& mesh);

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1;   // child index, or -1 for leaf
    int right = -1;
    int first = 0;   // leaf: range into tri_order_
    int count = 0;
  };

  const TriMesh* mesh_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<int> tri_order_;

  int build(std::vector<int>& tris, int begin, int end, const std::vector<Vec3>& centroids);
  friend struct BvhPairWalker;
  friend struct CrossWalker;
};

// True if any triangle of `a` geometrically crosses a triangle of `b`.
bool meshes_intersect(const TriMesh& a, const TriMesh& b);

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                         const Vec3& b1, const Vec3& b2);

}  // namespace df
