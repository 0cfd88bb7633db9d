#include "digitforge/boolean.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace df {

namespace {

bool same_mesh(const TriMesh& a, const TriMesh& b) {
  if (a.vertices.size() != b.vertices.size() || a.triangles.size() != b.triangles.size())
    return false;
  for (size_t i = 0; i < a.vertices.size(); ++i)
    if (a.vertices[i] != b.vertices[i]) return false;
  for (size_t i = 0; i < a.triangles.size(); ++i)
    if (a.triangles[i] != b.triangles[i]) return false;
  return true;
}

void require_closed(const TriMesh& m, const char* role) {
  if (!m.empty() && !is_closed(m))
    throw Error(Err::NonClosedInput, std::string("boolean operand ") + role + " is not closed");
}

TriMesh remesh(const ScalarField& field, const Aabb& bounds, double voxel) {
  TriMesh out = mesh_from_analytic_sdf(field, bounds, voxel);
  // kill sub-voxel speckle from field noise near coincident surfaces
  double min_comp = voxel * voxel * voxel;
  out = drop_small_components(out, min_comp);
  if (!out.empty() && !is_closed(out))
    throw Error(Err::RobustnessFailure, "re-meshed boolean result is not closed");
  return out;
}

}  // namespace

TriMesh boolean_op(const TriMesh& a, const TriMesh& b, BoolKind kind, double voxel) {
  if (!(voxel > 0.0)) throw Error(Err::InvalidArgument, "voxel size must be positive");
  require_closed(a, "a");
  require_closed(b, "b");

  if (a.empty()) {
    if (kind == BoolKind::Union) return b;
    return TriMesh{};  // empty - b, empty ^ b
  }
  if (b.empty()) {
    if (kind == BoolKind::Intersection) return TriMesh{};
    return a;
  }
  if (same_mesh(a, b)) {
    switch (kind) {
      case BoolKind::Union:
      case BoolKind::Intersection: return a;
      case BoolKind::Difference: return TriMesh{};
    }
  }
  Aabb ba = a.bounds(), bb = b.bounds();
  if (ba.disjoint(bb)) {
    switch (kind) {
      case BoolKind::Union: return append_meshes(a, b);
      case BoolKind::Intersection: return TriMesh{};
      case BoolKind::Difference: return a;
    }
  }

  MeshSdf sa(a), sb(b);
  if (!meshes_intersect(a, b)) {
    // Non-crossing closed surfaces are usually nested or disjoint, where the
    // result is a combination of the input surfaces and stays exact. Solids
    // that overlap while only touching along faces or edges show mixed signs
    // and fall through to the re-meshed path.
    Aabb whole = ba;
    whole.expand(bb);
    double touch = 1e-9 * (1.0 + whole.size().norm());
    auto side_range = [touch](const MeshSdf& s, const TriMesh& m) {
      double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
      auto probe = [&](const Vec3& p) {
        double d = s.signed_distance(p);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      };
      for (const auto& v : m.vertices) probe(v);
      for (const auto& t : m.triangles)
        probe((m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0);
      return std::make_pair(lo, hi);
    };
    auto [b_lo, b_hi] = side_range(sa, b);
    auto [a_lo, a_hi] = side_range(sb, a);
    bool b_in_a = b_hi <= touch && b_lo < -touch;
    bool a_in_b = !b_in_a && a_hi <= touch && a_lo < -touch;
    bool apart = b_lo >= -touch && a_lo >= -touch;
    if (b_in_a || a_in_b || apart) {
      switch (kind) {
        case BoolKind::Union:
          if (b_in_a) return a;
          if (a_in_b) return b;
          return append_meshes(a, b);
        case BoolKind::Intersection:
          if (b_in_a) return b;
          if (a_in_b) return a;
          return TriMesh{};
        case BoolKind::Difference:
          if (b_in_a) {
            TriMesh hole = b;
            for (auto& t : hole.triangles) std::swap(t[1], t[2]);
            return append_meshes(a, hole);
          }
          if (a_in_b) return TriMesh{};
          return a;
      }
    }
  }
  CoherentSdf ca(sa), cb(sb);
  ScalarField field;
  Aabb bounds;
  switch (kind) {
    case BoolKind::Union:
      field = [&](const Vec3& p) { return std::min(ca(p), cb(p)); };
      bounds = ba;
      bounds.expand(bb);
      break;
    case BoolKind::Intersection:
      field = [&](const Vec3& p) { return std::max(ca(p), cb(p)); };
      bounds.min = ba.min.cwiseMax(bb.min);
      bounds.max = ba.max.cwiseMin(bb.max);
      break;
    case BoolKind::Difference:
      field = [&](const Vec3& p) { return std::max(ca(p), -cb(p)); };
      bounds = ba;
      break;
  }
  bounds = bounds.padded(1.5 * voxel);
  return remesh(field, bounds, voxel);
}

TriMesh offset_mesh(const TriMesh& mesh, double distance, double voxel) {
  if (!(voxel > 0.0)) throw Error(Err::InvalidArgument, "voxel size must be positive");
  if (mesh.empty()) return TriMesh{};
  if (!is_closed(mesh)) throw Error(Err::NonClosedInput, "offset requires a closed mesh");
  MeshSdf sdf(mesh);
  CoherentSdf c(sdf);
  ScalarField field = [&](const Vec3& p) { return c(p) - distance; };
  Aabb bounds = mesh.bounds().padded(std::max(distance, 0.0) + 1.5 * voxel);
  TriMesh out = mesh_from_analytic_sdf(field, bounds, voxel);
  out = drop_small_components(out, voxel * voxel * voxel);
  if (!out.empty() && !is_closed(out))
    throw Error(Err::RobustnessFailure, "offset result is not closed");
  return out;
}

double intersection_volume(const TriMesh& a, const TriMesh& b, double voxel) {
  TriMesh inter = boolean_op(a, b, BoolKind::Intersection, voxel);
  return inter.empty() ? 0.0 : std::abs(signed_volume(inter));
}

}  // namespace df
