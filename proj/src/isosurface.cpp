#include "digitforge/isosurface.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace df {

namespace {

// 6-tetrahedron decomposition of the unit cube around the 0-7 diagonal.
// Corner bits: 1 = +x, 2 = +y, 4 = +z. Every cube face is split along the
// diagonal through corner 0 or corner 7, so neighbouring cells conform.
constexpr int kTets[6][4] = {
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
    {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7},
};

struct Emitter {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::unordered_map<uint64_t, int> vertex_of_edge;

  int crossing(uint64_t ga, uint64_t gb, double va, double vb, const Vec3& pa, const Vec3& pb,
               double iso) {
    const Vec3* p0 = &pa;
    const Vec3* p1 = &pb;
    double v0 = va, v1 = vb;
    if (ga > gb) {  // canonical order so shared tets get the identical vertex
      std::swap(ga, gb);
      std::swap(v0, v1);
      std::swap(p0, p1);
    }
    uint64_t key = (ga << 32) | gb;
    auto it = vertex_of_edge.find(key);
    if (it != vertex_of_edge.end()) return it->second;
    // keep crossings away from the lattice points so distinct vertices stay
    // distinct (and slivers stay positively oriented) after float rounding
    double t = std::clamp((iso - v0) / (v1 - v0), 1e-3, 1.0 - 1e-3);
    Vec3 p = *p0 + t * (*p1 - *p0);
    int idx = static_cast<int>(vertices.size());
    vertices.push_back(p);
    vertex_of_edge.emplace(key, idx);
    return idx;
  }

  void triangle(int a, int b, int c) { triangles.push_back({a, b, c}); }
};

// parity of the permutation taking `tet` to `arr` (both hold the same corners)
bool odd_permutation(const int (&tet)[4], const int (&arr)[4]) {
  int perm[4];
  for (int m = 0; m < 4; ++m)
    for (int t = 0; t < 4; ++t)
      if (arr[m] == tet[t]) perm[m] = t;
  int inversions = 0;
  for (int m = 0; m < 4; ++m)
    for (int t = m + 1; t < 4; ++t)
      if (perm[m] > perm[t]) ++inversions;
  return inversions % 2 == 1;
}

}  // namespace

TriMesh extract_grid_isosurface(const Vec3i& dims,
                                const std::function<Vec3(int, int, int)>& position,
                                const std::vector<double>& values, double iso) {
  if ((dims.array() < 2).any())
    throw Error(Err::DegenerateVolume, "grid needs at least 2 samples per axis");
  const int nx = dims.x(), ny = dims.y(), nz = dims.z();
  auto gid = [nx, ny](int i, int j, int k) {
    return static_cast<uint64_t>(i) + static_cast<uint64_t>(nx) *
           (static_cast<uint64_t>(j) + static_cast<uint64_t>(ny) * static_cast<uint64_t>(k));
  };

  Emitter em;
  std::vector<Vec3> corner_pos(8);
  double corner_val[8];
  uint64_t corner_gid[8];
  // lazily computed world positions per lattice point, cached for the cell row
  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        int inside_mask = 0;
        for (int c = 0; c < 8; ++c) {
          int ci = i + (c & 1), cj = j + ((c >> 1) & 1), ck = k + ((c >> 2) & 1);
          uint64_t g = gid(ci, cj, ck);
          double v = values[g];
          if (v == iso) v = iso + tol::iso_nudge;
          corner_gid[c] = g;
          corner_val[c] = v;
          if (v > iso) inside_mask |= 1 << c;
        }
        if (inside_mask == 0 || inside_mask == 0xff) continue;
        for (int c = 0; c < 8; ++c)
          corner_pos[c] = position(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));

        for (const auto& tet : kTets) {
          int in[4], nin = 0, out[4], nout = 0;
          for (int c = 0; c < 4; ++c) {
            if (inside_mask & (1 << tet[c])) in[nin++] = tet[c];
            else out[nout++] = tet[c];
          }
          if (nin == 0 || nin == 4) continue;
          auto cross = [&](int a, int b) {
            return em.crossing(corner_gid[a], corner_gid[b], corner_val[a], corner_val[b],
                               corner_pos[a], corner_pos[b], iso);
          };
          // Every tet in kTets is positively oriented in index space, so the
          // winding follows from the parity of the in/out arrangement. This
          // stays consistent even for degenerate (zero-area) triangles.
          if (nin == 1) {
            int arr[4] = {in[0], out[0], out[1], out[2]};
            if (odd_permutation(tet, arr)) std::swap(out[1], out[2]);
            em.triangle(cross(in[0], out[0]), cross(in[0], out[1]), cross(in[0], out[2]));
          } else if (nin == 3) {
            int arr[4] = {out[0], in[0], in[1], in[2]};
            if (!odd_permutation(tet, arr)) std::swap(in[1], in[2]);
            em.triangle(cross(out[0], in[0]), cross(out[0], in[1]), cross(out[0], in[2]));
          } else {
            int arr[4] = {in[0], in[1], out[0], out[1]};
            if (odd_permutation(tet, arr)) std::swap(out[0], out[1]);
            int v00 = cross(in[0], out[0]);
            int v01 = cross(in[0], out[1]);
            int v11 = cross(in[1], out[1]);
            int v10 = cross(in[1], out[0]);
            em.triangle(v00, v01, v11);
            em.triangle(v00, v11, v10);
          }
        }
      }
    }
  }
  TriMesh m;
  m.vertices = std::move(em.vertices);
  m.triangles = std::move(em.triangles);

  // a mirroring index-to-world map reverses every winding; detect and undo
  Vec3 o = position(0, 0, 0);
  Eigen::Matrix3d jac;
  jac.col(0) = position(1, 0, 0) - o;
  jac.col(1) = position(0, 1, 0) - o;
  jac.col(2) = position(0, 0, 1) - o;
  if (jac.determinant() < 0.0)
    for (auto& t : m.triangles) std::swap(t[1], t[2]);
  return m;
}

TriMesh extract_isosurface(const VoxelVolume& volume, const IsoParams& params) {
  volume.validate();
  if ((volume.dims.array() < 2).any())
    throw Error(Err::DegenerateVolume, "volume needs at least 2 samples per axis");
  if (params.min_component_volume < 0.0)
    throw Error(Err::InvalidArgument, "min component volume must be >= 0");
  std::vector<double> values(volume.samples.begin(), volume.samples.end());
  TriMesh mesh = extract_grid_isosurface(
      volume.dims,
      [&volume](int i, int j, int k) { return volume.world(i, j, k); },
      values, params.iso_value);
  return drop_small_components(mesh, params.min_component_volume);
}

TriMesh mesh_from_analytic_sdf(const ScalarField& field, const Aabb& bounds, double voxel) {
  if (!(voxel > 0.0)) throw Error(Err::InvalidArgument, "voxel size must be positive");
  if (!bounds.valid() || (bounds.size().array() <= 0.0).any())
    throw Error(Err::InvalidArgument, "bounds must be non-degenerate");
  Aabb padded = bounds.padded(voxel);
  // stagger the lattice by half a voxel: flat faces of the field tend to sit
  // at round offsets from the bounds and would otherwise coincide with sample
  // planes, which turns them into micro-corrugation
  Vec3 org = padded.min - Vec3::Constant(0.5 * voxel);
  Vec3 size = padded.max - org;
  Vec3i dims(static_cast<int>(std::ceil(size.x() / voxel)) + 1,
             static_cast<int>(std::ceil(size.y() / voxel)) + 1,
             static_cast<int>(std::ceil(size.z() / voxel)) + 1);
  std::vector<double> values(static_cast<size_t>(dims.x()) * dims.y() * dims.z());
  size_t idx = 0;
  for (int k = 0; k < dims.z(); ++k)
    for (int j = 0; j < dims.y(); ++j)
      for (int i = 0; i < dims.x(); ++i)
        values[idx++] = -field(org + voxel * Vec3(i, j, k));
  return extract_grid_isosurface(
      dims, [&](int i, int j, int k) { return Vec3(org + voxel * Vec3(i, j, k)); }, values, 0.0);
}

}  // namespace df
