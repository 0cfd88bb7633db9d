#include "digitforge/validate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "digitforge/bvh.hpp"

namespace df {

namespace {

// Distances from inward ray casts at triangle centroids. `perp_cos` filters
// grazing exits so concave corners do not register as thin walls.
std::vector<double> inward_ray_depths(const TriMesh& mesh, int max_samples, double perp_cos) {
  std::vector<double> depths;
  if (mesh.empty()) return depths;
  TriBvh bvh(mesh);
  size_t n = mesh.triangles.size();
  size_t stride = std::max<size_t>(1, n / static_cast<size_t>(max_samples));
  for (size_t i = 0; i < n; i += stride) {
    Vec3 normal = triangle_normal(mesh, static_cast<int>(i));
    if (normal.isZero()) continue;
    const auto& t = mesh.triangles[i];
    Vec3 c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
    Vec3 dir = -normal;
    auto hit = bvh.first_hit(c, dir, 1e-6);
    if (!hit) continue;
    Vec3 hn = triangle_normal(mesh, hit->triangle);
    if (hn.dot(dir) < perp_cos) continue;
    depths.push_back(hit->t);
  }
  return depths;
}

}  // namespace

ValidationReport validate_mesh(const TriMesh& mesh) {
  ValidationReport r;
  if (mesh.empty()) return r;

  r.closed = is_closed(mesh);
  r.manifold = is_edge_manifold(mesh);

  // winding is consistent when every undirected edge shared by two triangles
  // is traversed in opposite directions
  {
    std::unordered_map<uint64_t, int> dir_count;
    auto dkey = [](int a, int b) {
      return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
    };
    bool ok = true;
    for (const auto& t : mesh.triangles)
      for (int e = 0; e < 3; ++e)
        if (++dir_count[dkey(t[e], t[(e + 1) % 3])] > 1) ok = false;
    r.consistent_winding = ok;
  }

  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    double area =
        0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                  .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                  .norm();
    if (area < tol::min_triangle_area) ++r.degenerate_triangles;
  }

  r.self_intersections = TriBvh::self_intersection_count(mesh);
  r.area_mm2 = surface_area(mesh);
  if (r.closed) r.volume_mm3 = signed_volume(mesh);

  auto depths = inward_ray_depths(mesh, 2000, 0.5);
  r.min_feature_mm =
      depths.empty() ? 0.0 : *std::min_element(depths.begin(), depths.end());
  return r;
}

WallStats sample_wall_thickness(const TriMesh& solid, int max_samples) {
  WallStats w;
  auto depths = inward_ray_depths(solid, max_samples, 0.7);
  if (depths.empty()) return w;
  std::sort(depths.begin(), depths.end());
  w.samples = depths.size();
  w.min_mm = depths.front();
  w.max_mm = depths.back();
  w.median_mm = depths[depths.size() / 2];
  return w;
}

}  // namespace df
