#include "digitforge/trimesh.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace df {

const char* err_name(Err e) {
  switch (e) {
    case Err::MixedSeries: return "MixedSeries";
    case Err::NonUniformSpacing: return "NonUniformSpacing";
    case Err::UnsupportedEncoding: return "UnsupportedEncoding";
    case Err::InsufficientSlices: return "InsufficientSlices";
    case Err::SizeMismatch: return "SizeMismatch";
    case Err::MalformedHeader: return "MalformedHeader";
    case Err::DegenerateVolume: return "DegenerateVolume";
    case Err::NonClosedInput: return "NonClosedInput";
    case Err::RobustnessFailure: return "RobustnessFailure";
    case Err::EmptyMesh: return "EmptyMesh";
    case Err::DegenerateGeometry: return "DegenerateGeometry";
    case Err::BoneOutsideSkin: return "BoneOutsideSkin";
    case Err::ThicknessViolation: return "ThicknessViolation";
    case Err::AxisMiss: return "AxisMiss";
    case Err::RankDeficient: return "RankDeficient";
    case Err::SplitMiss: return "SplitMiss";
    case Err::Truncated: return "Truncated";
    case Err::AsciiUnsupported: return "AsciiUnsupported";
    case Err::MissingUpstreamArtifact: return "MissingUpstreamArtifact";
    case Err::IoFailure: return "IoFailure";
    case Err::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

RigidTransform RigidTransform::then(const RigidTransform& outer) const {
  RigidTransform r;
  r.rotation = outer.rotation * rotation;
  r.translation = outer.rotation * translation + outer.translation;
  return r;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform r;
  r.rotation = rotation.transpose();
  r.translation = -(rotation.transpose() * translation);
  return r;
}

bool RigidTransform::valid() const {
  Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() < tol::orthonormal && rotation.determinant() > 0.0;
}

Plane::Plane(const Vec3& p, const Vec3& n) : point(p) {
  double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len))
    throw Error(Err::InvalidArgument, "plane normal must be nonzero");
  normal = n / len;
}

void Aabb::expand(const Vec3& p) {
  min = min.cwiseMin(p);
  max = max.cwiseMax(p);
}

void Aabb::expand(const Aabb& b) {
  min = min.cwiseMin(b.min);
  max = max.cwiseMax(b.max);
}

Aabb Aabb::padded(double d) const {
  Aabb r;
  r.min = min - Vec3::Constant(d);
  r.max = max + Vec3::Constant(d);
  return r;
}

bool Aabb::disjoint(const Aabb& b) const {
  return (max.array() < b.min.array()).any() || (b.max.array() < min.array()).any();
}

Aabb TriMesh::bounds() const {
  Aabb b;
  for (const auto& v : vertices) b.expand(v);
  return b;
}

static double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

TriMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                  int* dropped) {
  TriMesh m;
  m.vertices = std::move(vertices);
  int n = static_cast<int>(m.vertices.size());
  int drop = 0;
  m.triangles.reserve(triangles.size());
  for (const auto& t : triangles) {
    if (t[0] < 0 || t[1] < 0 || t[2] < 0 || t[0] >= n || t[1] >= n || t[2] >= n)
      throw Error(Err::InvalidArgument, "triangle index out of range");
    if (tri_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]) < tol::min_triangle_area) {
      ++drop;
      continue;
    }
    m.triangles.push_back(t);
  }
  if (dropped) *dropped = drop;
  return m;
}

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t) {
  if (!t.valid()) throw Error(Err::InvalidArgument, "transform is not rigid");
  TriMesh r = mesh;
  for (auto& v : r.vertices) v = t.apply(v);
  return r;
}

TriMesh mirror_mesh(const TriMesh& mesh, const Plane& plane) {
  TriMesh r = mesh;
  for (auto& v : r.vertices) v = plane.reflect(v);
  for (auto& t : r.triangles) std::swap(t[1], t[2]);  // keep signed volume positive
  return r;
}

TriMesh append_meshes(const TriMesh& a, const TriMesh& b) {
  TriMesh r = a;
  int off = static_cast<int>(a.vertices.size());
  r.vertices.insert(r.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const auto& t : b.triangles)
    r.triangles.push_back({t[0] + off, t[1] + off, t[2] + off});
  return r;
}

static double signed_volume_unchecked(const TriMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    v += a.dot(b.cross(c));
  }
  return v / 6.0;
}

double signed_volume(const TriMesh& mesh) {
  if (mesh.empty()) return 0.0;
  if (!is_closed(mesh)) throw Error(Err::NonClosedInput, "signed_volume requires a closed mesh");
  return signed_volume_unchecked(mesh);
}

double surface_area(const TriMesh& mesh) {
  double a = 0.0;
  for (const auto& t : mesh.triangles)
    a += tri_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
  return a;
}

static uint64_t edge_key(int a, int b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

// Closed and consistently wound: every directed edge appears exactly once and
// its reverse appears exactly once.
bool is_closed(const TriMesh& mesh) {
  if (mesh.empty()) return false;
  std::unordered_map<uint64_t, int> directed;
  directed.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      int a = t[i], b = t[(i + 1) % 3];
      if (a == b) return false;
      if (++directed[edge_key(a, b)] > 1) return false;
    }
  }
  for (const auto& [k, c] : directed) {
    int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    auto it = directed.find(edge_key(b, a));
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

bool is_edge_manifold(const TriMesh& mesh) {
  std::unordered_map<uint64_t, int> undirected;
  undirected.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      int a = t[i], b = t[(i + 1) % 3];
      if (a > b) std::swap(a, b);
      ++undirected[edge_key(a, b)];
    }
  }
  for (const auto& [k, c] : undirected) {
    (void)k;
    if (c != 2) return false;
  }
  return true;
}

namespace {
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};
}  // namespace

std::vector<TriMesh> connected_components(const TriMesh& mesh) {
  int nv = static_cast<int>(mesh.vertices.size());
  UnionFind uf(nv);
  for (const auto& t : mesh.triangles) {
    uf.unite(t[0], t[1]);
    uf.unite(t[0], t[2]);
  }
  std::unordered_map<int, int> comp_of_root;
  std::vector<TriMesh> comps;
  std::vector<std::unordered_map<int, int>> remap;
  for (const auto& t : mesh.triangles) {
    int root = uf.find(t[0]);
    auto it = comp_of_root.find(root);
    int ci;
    if (it == comp_of_root.end()) {
      ci = static_cast<int>(comps.size());
      comp_of_root[root] = ci;
      comps.emplace_back();
      remap.emplace_back();
    } else {
      ci = it->second;
    }
    std::array<int, 3> nt{};
    for (int i = 0; i < 3; ++i) {
      auto [vit, inserted] = remap[ci].try_emplace(t[i], static_cast<int>(comps[ci].vertices.size()));
      if (inserted) comps[ci].vertices.push_back(mesh.vertices[t[i]]);
      nt[i] = vit->second;
    }
    comps[ci].triangles.push_back(nt);
  }
  return comps;
}

TriMesh drop_small_components(const TriMesh& mesh, double min_volume_mm3) {
  if (mesh.empty() || min_volume_mm3 <= 0.0) return mesh;
  TriMesh out;
  for (auto& c : connected_components(mesh)) {
    double vol = is_closed(c) ? std::abs(signed_volume_unchecked(c))
                              : std::numeric_limits<double>::max();
    if (vol >= min_volume_mm3) out = append_meshes(out, c);
  }
  return out;
}

Vec3 area_centroid(const TriMesh& mesh) {
  Vec3 acc = Vec3::Zero();
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    double area = tri_area(a, b, c);
    acc += area * (a + b + c) / 3.0;
    total += area;
  }
  if (total <= 0.0) throw Error(Err::EmptyMesh, "mesh has no area");
  return acc / total;
}

Vec3 triangle_normal(const TriMesh& mesh, int tri) {
  const auto& t = mesh.triangles[tri];
  Vec3 n = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
               .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
  double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

}  // namespace df
