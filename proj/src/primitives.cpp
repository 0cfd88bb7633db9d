#include "digitforge/primitives.hpp"

#include <cmath>
#include <map>

namespace df {

std::pair<Vec3, Vec3> perpendicular_frame(const Vec3& w) {
  Vec3 pick = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 u = pick.cross(w).normalized();
  Vec3 v = w.cross(u);
  return {u, v};
}

TriMesh make_box(const Vec3& mn, const Vec3& mx) {
  if (!((mx.array() > mn.array()).all()))
    throw Error(Err::InvalidArgument, "box extents must be positive");
  std::vector<Vec3> v = {
      {mn.x(), mn.y(), mn.z()}, {mx.x(), mn.y(), mn.z()}, {mn.x(), mx.y(), mn.z()},
      {mx.x(), mx.y(), mn.z()}, {mn.x(), mn.y(), mx.z()}, {mx.x(), mn.y(), mx.z()},
      {mn.x(), mx.y(), mx.z()}, {mx.x(), mx.y(), mx.z()}};
  std::vector<std::array<int, 3>> t = {
      {0, 2, 1}, {1, 2, 3},  // -z
      {4, 5, 6}, {5, 7, 6},  // +z
      {0, 1, 4}, {1, 5, 4},  // -y
      {2, 6, 3}, {3, 6, 7},  // +y
      {0, 4, 2}, {2, 4, 6},  // -x
      {1, 3, 5}, {3, 7, 5},  // +x
  };
  TriMesh m;
  m.vertices = std::move(v);
  m.triangles = std::move(t);
  return m;
}

// Extrudes a CCW profile (in the u,v plane at base_center) along `axis` by
// `height` and caps both ends with fans from the profile centroid; valid for
// profiles that are star-shaped around their centroid.
static TriMesh extrude_profile(const std::vector<Eigen::Vector2d>& profile,
                               const Vec3& base_center, const Vec3& axis, double height) {
  Vec3 w = axis.normalized();
  auto [u, v] = perpendicular_frame(w);
  int n = static_cast<int>(profile.size());
  Eigen::Vector2d c2 = Eigen::Vector2d::Zero();
  for (const auto& p : profile) c2 += p;
  c2 /= n;

  TriMesh m;
  auto lift = [&](const Eigen::Vector2d& p, double h) {
    return Vec3(base_center + p.x() * u + p.y() * v + h * w);
  };
  for (const auto& p : profile) m.vertices.push_back(lift(p, 0.0));
  for (const auto& p : profile) m.vertices.push_back(lift(p, height));
  int cb = static_cast<int>(m.vertices.size());
  m.vertices.push_back(lift(c2, 0.0));
  int ct = cb + 1;
  m.vertices.push_back(lift(c2, height));

  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    // side quad, outward for CCW profile
    m.triangles.push_back({i, j, n + j});
    m.triangles.push_back({i, n + j, n + i});
    m.triangles.push_back({cb, j, i});          // bottom cap, -w
    m.triangles.push_back({ct, n + i, n + j});  // top cap, +w
  }
  return m;
}

TriMesh make_cylinder(const Vec3& base_center, const Vec3& axis, double radius, double height,
                      int segments) {
  if (!(radius > 0.0 && height > 0.0) || segments < 3)
    throw Error(Err::InvalidArgument, "bad cylinder parameters");
  std::vector<Eigen::Vector2d> profile;
  for (int i = 0; i < segments; ++i) {
    double a = 2.0 * M_PI * i / segments;
    profile.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return extrude_profile(profile, base_center, axis, height);
}

TriMesh make_keyed_cylinder(const Vec3& base_center, const Vec3& axis, double radius,
                            double height, double rib_width, double rib_depth,
                            const Vec3& rib_dir, int segments) {
  if (!(radius > 0.0 && height > 0.0 && rib_width > 0.0 && rib_depth > 0.0) || segments < 8)
    throw Error(Err::InvalidArgument, "bad keyed cylinder parameters");
  if (rib_width >= 2.0 * radius)
    throw Error(Err::InvalidArgument, "rib wider than the cylinder");
  double alpha = std::asin(0.5 * rib_width / radius);
  std::vector<Eigen::Vector2d> profile;
  // circle arc from +alpha around to -alpha (CCW), then the rib rectangle
  for (int i = 0; i <= segments; ++i) {
    double a = alpha + (2.0 * M_PI - 2.0 * alpha) * i / segments;
    profile.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  double base_x = radius * std::cos(alpha);
  profile.emplace_back(base_x + rib_depth, -0.5 * rib_width);
  profile.emplace_back(base_x + rib_depth, 0.5 * rib_width);

  Vec3 w = axis.normalized();
  // rotate the frame so the rib (+u in profile space) points along rib_dir
  Vec3 d = rib_dir - rib_dir.dot(w) * w;
  if (d.norm() > 1e-12) {
    Vec3 du = d.normalized();
    Vec3 dv = w.cross(du);
    TriMesh m = extrude_profile(profile, Vec3::Zero(), Vec3::UnitZ(), height);
    for (auto& vert : m.vertices) {
      Vec3 p = vert;
      vert = base_center + p.x() * du + p.y() * dv + p.z() * w;
    }
    return m;
  }
  return extrude_profile(profile, base_center, axis, height);
}

TriMesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments, int rings) {
  Vec3 ab = b - a;
  double len = ab.norm();
  if (!(radius > 0.0) || segments < 3 || rings < 2)
    throw Error(Err::InvalidArgument, "bad capsule parameters");
  Vec3 w = len > 1e-12 ? Vec3(ab / len) : Vec3::UnitZ();
  auto [u, v] = perpendicular_frame(w);

  TriMesh m;
  int bottom_pole = 0;
  m.vertices.push_back(a - radius * w);
  // bottom hemisphere rings (around a), then top hemisphere rings (around b)
  std::vector<int> prev_ring;
  auto add_ring = [&](const Vec3& center, double ring_r, double h) {
    std::vector<int> ring;
    for (int s = 0; s < segments; ++s) {
      double t = 2.0 * M_PI * s / segments;
      ring.push_back(static_cast<int>(m.vertices.size()));
      m.vertices.push_back(center + ring_r * (std::cos(t) * u + std::sin(t) * v) + h * w);
    }
    return ring;
  };
  for (int r = 1; r <= rings; ++r) {
    double phi = M_PI_2 * r / rings;  // from pole to equator
    auto ring = add_ring(a, radius * std::sin(phi), -radius * std::cos(phi));
    if (r == 1) {
      for (int s = 0; s < segments; ++s)
        m.triangles.push_back({bottom_pole, ring[(s + 1) % segments], ring[s]});
    } else {
      for (int s = 0; s < segments; ++s) {
        int sn = (s + 1) % segments;
        m.triangles.push_back({prev_ring[s], ring[sn], ring[s]});
        m.triangles.push_back({prev_ring[s], prev_ring[sn], ring[sn]});
      }
    }
    prev_ring = ring;
  }
  for (int r = rings - 1; r >= 0; --r) {
    double phi = M_PI_2 * r / rings;
    if (r == 0) {
      int top_pole = static_cast<int>(m.vertices.size());
      m.vertices.push_back(b + radius * w);
      for (int s = 0; s < segments; ++s)
        m.triangles.push_back({prev_ring[s], prev_ring[(s + 1) % segments], top_pole});
      break;
    }
    auto ring = add_ring(b, radius * std::sin(phi), radius * std::cos(phi));
    for (int s = 0; s < segments; ++s) {
      int sn = (s + 1) % segments;
      m.triangles.push_back({prev_ring[s], ring[sn], ring[s]});
      m.triangles.push_back({prev_ring[s], prev_ring[sn], ring[sn]});
    }
    prev_ring = ring;
  }
  return m;
}

TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      int idx = static_cast<int>(verts.size());
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  TriMesh m;
  m.vertices.reserve(verts.size());
  for (const auto& v : verts) m.vertices.push_back(center + radius * v);
  m.triangles = std::move(tris);
  return m;
}

}  // namespace df
