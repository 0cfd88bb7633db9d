#include "digitforge/sdf.hpp"

#include <cmath>

namespace df {

static uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

MeshSdf::MeshSdf(TriMesh mesh) : mesh_(std::move(mesh)) {
  if (!mesh_.empty() && !is_closed(mesh_))
    throw Error(Err::NonClosedInput, "signed distance requires a closed mesh");
  bvh_ = TriBvh(mesh_);
  int nt = static_cast<int>(mesh_.triangles.size());
  face_normals_.resize(nt);
  face_quality_.resize(nt);
  vertex_normals_.assign(mesh_.vertices.size(), Vec3::Zero());
  for (int i = 0; i < nt; ++i) {
    const auto& t = mesh_.triangles[i];
    const Vec3& a = mesh_.vertices[t[0]];
    const Vec3& b = mesh_.vertices[t[1]];
    const Vec3& c = mesh_.vertices[t[2]];
    Vec3 n = (b - a).cross(c - a);
    double len = n.norm();
    Vec3 un = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    face_normals_[i] = un;
    double l2 = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), (c - b).squaredNorm()});
    face_quality_[i] = l2 > 0.0 ? len / l2 : 0.0;  // aspect: area over longest edge squared
    // angle-weighted accumulation at each corner
    auto corner_angle = [](const Vec3& p, const Vec3& q, const Vec3& r) {
      Vec3 u = q - p, v = r - p;
      double d = u.norm() * v.norm();
      if (d <= 0.0) return 0.0;
      double cosang = std::clamp(u.dot(v) / d, -1.0, 1.0);
      return std::acos(cosang);
    };
    vertex_normals_[t[0]] += corner_angle(a, b, c) * un;
    vertex_normals_[t[1]] += corner_angle(b, c, a) * un;
    vertex_normals_[t[2]] += corner_angle(c, a, b) * un;
    // try_emplace: Eigen vectors are not zero-initialized by default
    for (int e = 0; e < 3; ++e)
      edge_normals_.try_emplace(ekey(t[e], t[(e + 1) % 3]), Vec3::Zero()).first->second += un;
  }
}

double MeshSdf::signed_distance(const Vec3& q, double upper_hint) const {
  if (mesh_.empty()) return std::numeric_limits<double>::max();
  TriBvh::ClosestHit hit = bvh_.closest_point(q, upper_hint);

  // The nearest point is often shared by several triangles (edges, vertices,
  // degenerate slivers). The sign decision must not depend on which of them
  // the tree search happened to return, so look at every near-tied candidate
  // and trust the one whose feature pseudonormal is least ambiguous.
  double tie = hit.dist + 1e-9 * (1.0 + hit.dist);
  candidates_.clear();
  bvh_.collect_within(q, tie, candidates_);
  if (candidates_.empty()) candidates_.push_back(hit.triangle);

  double best_conf = -1.0;
  double sign = 1.0;
  bool shaky = false;
  for (int ti : candidates_) {
    if (face_quality_[ti] < 1e-4) shaky = true;
    const auto& t = mesh_.triangles[ti];
    const Vec3& a = mesh_.vertices[t[0]];
    const Vec3& b = mesh_.vertices[t[1]];
    const Vec3& c = mesh_.vertices[t[2]];
    Vec3 cp = closest_point_on_triangle(q, a, b, c);

    // barycentric coordinates of the closest point
    Vec3 v0 = b - a, v1 = c - a, v2 = cp - a;
    double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
    double d20 = v2.dot(v0), d21 = v2.dot(v1);
    double denom = d00 * d11 - d01 * d01;
    double bv = denom != 0.0 ? (d11 * d20 - d01 * d21) / denom : 0.0;
    double bw = denom != 0.0 ? (d00 * d21 - d01 * d20) / denom : 0.0;
    double bu = 1.0 - bv - bw;

    constexpr double feat_eps = 1e-9;
    Vec3 n;
    int on_u = bu > feat_eps, on_v = bv > feat_eps, on_w = bw > feat_eps;
    int interior = on_u + on_v + on_w;
    if (interior == 3) {
      n = face_normals_[ti];
    } else if (interior == 2) {
      int i0, i1;
      if (!on_u) { i0 = t[1]; i1 = t[2]; }
      else if (!on_v) { i0 = t[2]; i1 = t[0]; }
      else { i0 = t[0]; i1 = t[1]; }
      auto it = edge_normals_.find(ekey(i0, i1));
      n = it != edge_normals_.end() ? it->second : face_normals_[ti];
    } else {
      int vi = on_u ? t[0] : (on_v ? t[1] : t[2]);
      n = vertex_normals_[vi];
    }
    double s = (q - cp).dot(n);
    // alignment between the offset direction and the feature pseudonormal
    double conf = std::abs(s) / (n.norm() * (q - cp).norm() + 1e-300);
    if (conf > best_conf) {
      best_conf = conf;
      sign = s >= 0.0 ? 1.0 : -1.0;
    }
  }
  if ((shaky || best_conf < 0.3) && hit.dist > 0.0) {
    // pseudonormals lie near degenerate or folded triangles; settle the sign
    // by crossing parity along rays that avoid grazing hits
    for (int k = 0; k < 64; ++k) {
      // spherical Fibonacci directions, identical for every query
      double z = 1.0 - (2.0 * k + 1.0) / 64.0;
      double phi = 2.39996322972865332 * k;  // golden angle
      double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec3 dir(rxy * std::cos(phi), rxy * std::sin(phi), z);
      if (auto crossings = bvh_.ray_parity(q, dir)) {
        sign = (*crossings % 2 == 1) ? -1.0 : 1.0;
        break;
      }
    }
  }
  return sign * hit.dist;
}

double sdf_sphere(const Vec3& p, const Vec3& center, double r) {
  return (p - center).norm() - r;
}

double sdf_box(const Vec3& p, const Vec3& center, const Vec3& half_extent) {
  Vec3 q = (p - center).cwiseAbs() - half_extent;
  Vec3 outside = q.cwiseMax(0.0);
  double inside = std::min(q.maxCoeff(), 0.0);
  return outside.norm() + inside;
}

double sdf_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  Vec3 pa = p - a, ba = b - a;
  double h = std::clamp(pa.dot(ba) / ba.squaredNorm(), 0.0, 1.0);
  return (pa - h * ba).norm() - r;
}

double sdf_capped_cylinder(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  Vec3 ba = b - a, pa = p - a;
  double baba = ba.squaredNorm();
  double paba = pa.dot(ba);
  double x = (pa * baba - ba * paba).norm() - r * baba;
  double y = std::abs(paba - baba * 0.5) - baba * 0.5;
  double x2 = x * x;
  double y2 = y * y * baba;
  double d;
  if (std::max(x, y) < 0.0) {
    d = -std::min(x2, y2);
  } else {
    d = (x > 0.0 ? x2 : 0.0) + (y > 0.0 ? y2 : 0.0);
  }
  double s = d < 0.0 ? -1.0 : 1.0;
  return s * std::sqrt(std::abs(d)) / baba;
}

double sdf_rounded_box(const Vec3& p, const Vec3& center, const Vec3& half_extent, double round) {
  return sdf_box(p, center, half_extent - Vec3::Constant(round)) - round;
}

}  // namespace df
