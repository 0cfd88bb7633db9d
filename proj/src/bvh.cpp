#include "digitforge/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace df {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return a + v * ab;
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return a + w * ac;
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return a + v * ab + w * ac;
}

TriBvh::TriBvh(const TriMesh& mesh) : mesh_(&mesh) {
  int n = static_cast<int>(mesh.triangles.size());
  if (n == 0) return;
  std::vector<Vec3> centroids(n);
  for (int i = 0; i < n; ++i) {
    const auto& t = mesh.triangles[i];
    centroids[i] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
  }
  tri_order_.resize(n);
  for (int i = 0; i < n; ++i) tri_order_[i] = i;
  nodes_.reserve(2 * n);
  build(tri_order_, 0, n, centroids);
}

int TriBvh::build(std::vector<int>& tris, int begin, int end, const std::vector<Vec3>& centroids) {
  Node node;
  Aabb box;
  for (int i = begin; i < end; ++i) {
    const auto& t = mesh_->triangles[tris[i]];
    box.expand(mesh_->vertices[t[0]]);
    box.expand(mesh_->vertices[t[1]]);
    box.expand(mesh_->vertices[t[2]]);
  }
  node.lo = box.min;
  node.hi = box.max;
  int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= 4) {
    nodes_[idx].first = begin;
    nodes_[idx].count = end - begin;
    return idx;
  }
  Vec3 ext = box.max - box.min;
  int axis = 0;
  if (ext.y() > ext.x()) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  int mid = (begin + end) / 2;
  std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  int l = build(tris, begin, mid, centroids);
  int r = build(tris, mid, end, centroids);
  nodes_[idx].left = l;
  nodes_[idx].right = r;
  return idx;
}

static double box_dist2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double d = 0.0;
    if (q[i] < lo[i]) d = lo[i] - q[i];
    else if (q[i] > hi[i]) d = q[i] - hi[i];
    d2 += d * d;
  }
  return d2;
}

TriBvh::ClosestHit TriBvh::closest_point(const Vec3& q, double upper_bound) const {
  ClosestHit best;
  best.dist = std::numeric_limits<double>::max();
  if (nodes_.empty()) return best;
  double best2 = upper_bound < std::numeric_limits<double>::max()
                     ? upper_bound * upper_bound
                     : std::numeric_limits<double>::max();
  bool found = false;
  int stack[64];
  double stack_d2[64];
  int sp = 0;
  stack[sp] = 0;
  stack_d2[sp++] = box_dist2(q, nodes_[0].lo, nodes_[0].hi);
  while (sp > 0) {
    --sp;
    if (stack_d2[sp] > best2) continue;
    const Node& node = nodes_[stack[sp]];
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        int ti = tri_order_[i];
        const auto& t = mesh_->triangles[ti];
        Vec3 cp = closest_point_on_triangle(q, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                            mesh_->vertices[t[2]]);
        double d2 = (cp - q).squaredNorm();
        if (d2 <= best2) {
          found = true;
          best2 = d2;
          best.dist = std::sqrt(d2);
          best.point = cp;
          best.triangle = ti;
        }
      }
    } else {
      double dl = box_dist2(q, nodes_[node.left].lo, nodes_[node.left].hi);
      double dr = box_dist2(q, nodes_[node.right].lo, nodes_[node.right].hi);
      // push farther first
      if (dl < dr) {
        stack[sp] = node.right; stack_d2[sp++] = dr;
        stack[sp] = node.left; stack_d2[sp++] = dl;
      } else {
        stack[sp] = node.left; stack_d2[sp++] = dl;
        stack[sp] = node.right; stack_d2[sp++] = dr;
      }
    }
  }
  if (!found) {
    // upper bound pruned everything; redo unbounded
    return closest_point(q);
  }
  return best;
}

void TriBvh::collect_within(const Vec3& q, double radius, std::vector<int>& out) const {
  out.clear();
  if (nodes_.empty()) return;
  double r2 = radius * radius;
  int stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (box_dist2(q, node.lo, node.hi) > r2) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        int ti = tri_order_[i];
        const auto& t = mesh_->triangles[ti];
        Vec3 cp = closest_point_on_triangle(q, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                            mesh_->vertices[t[2]]);
        if ((cp - q).squaredNorm() <= r2) out.push_back(ti);
      }
    } else {
      stack[sp++] = node.left;
      stack[sp++] = node.right;
    }
  }
}

static bool ray_box_open(const Vec3& o, const Vec3& inv_dir, const Vec3& lo, const Vec3& hi) {
  double t_min = 0.0, t_max = std::numeric_limits<double>::max();
  for (int i = 0; i < 3; ++i) {
    double t0 = (lo[i] - o[i]) * inv_dir[i];
    double t1 = (hi[i] - o[i]) * inv_dir[i];
    if (inv_dir[i] < 0.0) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_max < t_min) return false;
  }
  return true;
}

std::optional<int> TriBvh::ray_parity(const Vec3& q, const Vec3& dir) const {
  if (nodes_.empty()) return 0;
  Vec3 inv_dir;
  for (int i = 0; i < 3; ++i)
    inv_dir[i] = dir[i] != 0.0 ? 1.0 / dir[i] : std::numeric_limits<double>::max();
  int crossings = 0;
  int stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!ray_box_open(q, inv_dir, node.lo, node.hi)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& t = mesh_->triangles[tri_order_[i]];
        const Vec3& a = mesh_->vertices[t[0]];
        const Vec3& b = mesh_->vertices[t[1]];
        const Vec3& c = mesh_->vertices[t[2]];
        Vec3 e1 = b - a, e2 = c - a;
        Vec3 p = dir.cross(e2);
        double det = e1.dot(p);
        double scale = e1.norm() * e2.norm();
        Vec3 s = q - a;
        double ndist = std::abs(s.dot(e1.cross(e2)));  // unscaled plane distance
        if (std::abs(det) < 1e-9 * scale) {
          // ray nearly parallel to the triangle plane: fatal only if it could
          // actually pass close to it
          if (ndist < 1e-6 * scale) return std::nullopt;
          continue;
        }
        double inv = 1.0 / det;
        double u = s.dot(p) * inv;
        Vec3 qv = s.cross(e1);
        double v = dir.dot(qv) * inv;
        double tt = e2.dot(qv) * inv;
        constexpr double eps_b = 1e-6;
        bool inside = u > eps_b && v > eps_b && u + v < 1.0 - eps_b && tt > 1e-12;
        bool near_boundary = u > -eps_b && v > -eps_b && u + v < 1.0 + eps_b && tt > -1e-12;
        if (inside) ++crossings;
        else if (near_boundary) return std::nullopt;  // grazing: untrustworthy
      }
    } else {
      stack[sp++] = node.left;
      stack[sp++] = node.right;
    }
  }
  return crossings;
}

static bool ray_box(const Vec3& o, const Vec3& inv_dir, const Vec3& lo, const Vec3& hi,
                    double t_min, double t_max) {
  for (int i = 0; i < 3; ++i) {
    double t0 = (lo[i] - o[i]) * inv_dir[i];
    double t1 = (hi[i] - o[i]) * inv_dir[i];
    if (inv_dir[i] < 0.0) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_max < t_min) return false;
  }
  return true;
}

static bool ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c,
                         double& t_out) {
  // Moller-Trumbore
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 p = d.cross(e2);
  double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return false;
  double inv = 1.0 / det;
  Vec3 s = o - a;
  double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  Vec3 q = s.cross(e1);
  double v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  double t = e2.dot(q) * inv;
  if (t <= 0.0) return false;
  t_out = t;
  return true;
}

std::optional<TriBvh::RayHit> TriBvh::first_hit(const Vec3& q, const Vec3& dir, double t_min,
                                                double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  Vec3 inv_dir;
  for (int i = 0; i < 3; ++i)
    inv_dir[i] = dir[i] != 0.0 ? 1.0 / dir[i] : std::numeric_limits<double>::max();
  RayHit best;
  best.t = t_max;
  bool found = false;
  int stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!ray_box(q, inv_dir, node.lo, node.hi, t_min, best.t)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        int ti = tri_order_[i];
        const auto& t = mesh_->triangles[ti];
        double th;
        if (ray_triangle(q, dir, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                         mesh_->vertices[t[2]], th) &&
            th > t_min && th < best.t) {
          best.t = th;
          best.triangle = ti;
          found = true;
        }
      }
    } else {
      stack[sp++] = node.left;
      stack[sp++] = node.right;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

namespace {

// Strict segment/triangle crossing, used for intersection counting.
bool segment_crosses_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                              const Vec3& c) {
  Vec3 d = q - p;
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 pv = d.cross(e2);
  double det = e1.dot(pv);
  if (std::abs(det) < 1e-14) return false;
  double inv = 1.0 / det;
  Vec3 s = p - a;
  double u = s.dot(pv) * inv;
  if (u <= 0.0 || u >= 1.0) return false;
  Vec3 qv = s.cross(e1);
  double v = d.dot(qv) * inv;
  if (v <= 0.0 || u + v >= 1.0) return false;
  double t = e2.dot(qv) * inv;
  return t > 0.0 && t < 1.0;
}

}  // namespace

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                         const Vec3& b1, const Vec3& b2) {
  return segment_crosses_triangle(a0, a1, b0, b1, b2) ||
         segment_crosses_triangle(a1, a2, b0, b1, b2) ||
         segment_crosses_triangle(a2, a0, b0, b1, b2) ||
         segment_crosses_triangle(b0, b1, a0, a1, a2) ||
         segment_crosses_triangle(b1, b2, a0, a1, a2) ||
         segment_crosses_triangle(b2, b0, a0, a1, a2);
}

struct BvhPairWalker {
  const TriBvh& bvh;
  const TriMesh& mesh;
  long count = 0;

  bool share_vertex(int ta, int tb) const {
    const auto& a = mesh.triangles[ta];
    const auto& b = mesh.triangles[tb];
    for (int i : a)
      for (int j : b)
        if (i == j) return true;
    return false;
  }

  void leaf_pair(const TriBvh::Node& na, const TriBvh::Node& nb, bool same) {
    for (int i = na.first; i < na.first + na.count; ++i) {
      int jb = same ? i + 1 : nb.first;  // avoid double counting inside one leaf
      int je = nb.first + nb.count;
      for (int j = (same ? jb : nb.first); j < je; ++j) {
        int ta = bvh.tri_order_[i], tb = bvh.tri_order_[j];
        if (ta == tb || share_vertex(ta, tb)) continue;
        const auto& a = mesh.triangles[ta];
        const auto& b = mesh.triangles[tb];
        if (triangles_intersect(mesh.vertices[a[0]], mesh.vertices[a[1]], mesh.vertices[a[2]],
                                mesh.vertices[b[0]], mesh.vertices[b[1]], mesh.vertices[b[2]]))
          ++count;
      }
    }
  }

  void walk(int ia, int ib) {
    const auto& na = bvh.nodes_[ia];
    const auto& nb = bvh.nodes_[ib];
    if ((na.lo.array() > nb.hi.array()).any() || (nb.lo.array() > na.hi.array()).any()) return;
    bool leaf_a = na.left < 0, leaf_b = nb.left < 0;
    if (leaf_a && leaf_b) {
      leaf_pair(na, nb, ia == ib);
      return;
    }
    if (ia == ib) {
      walk(na.left, na.left);
      walk(na.right, na.right);
      walk(na.left, na.right);
      return;
    }
    if (leaf_b || (!leaf_a && (na.hi - na.lo).squaredNorm() > (nb.hi - nb.lo).squaredNorm())) {
      walk(na.left, ib);
      walk(na.right, ib);
    } else {
      walk(ia, nb.left);
      walk(ia, nb.right);
    }
  }
};

struct CrossWalker {
  const TriBvh& ba;
  const TriBvh& bb;
  const TriMesh& ma;
  const TriMesh& mb;
  bool hit = false;

  void walk(int ia, int ib) {
    if (hit) return;
    const auto& na = ba.nodes_[ia];
    const auto& nb = bb.nodes_[ib];
    if ((na.lo.array() > nb.hi.array()).any() || (nb.lo.array() > na.hi.array()).any()) return;
    bool leaf_a = na.left < 0, leaf_b = nb.left < 0;
    if (leaf_a && leaf_b) {
      for (int i = na.first; i < na.first + na.count && !hit; ++i)
        for (int j = nb.first; j < nb.first + nb.count && !hit; ++j) {
          const auto& a = ma.triangles[ba.tri_order_[i]];
          const auto& b = mb.triangles[bb.tri_order_[j]];
          if (triangles_intersect(ma.vertices[a[0]], ma.vertices[a[1]], ma.vertices[a[2]],
                                  mb.vertices[b[0]], mb.vertices[b[1]], mb.vertices[b[2]]))
            hit = true;
        }
      return;
    }
    if (leaf_b || (!leaf_a && (na.hi - na.lo).squaredNorm() > (nb.hi - nb.lo).squaredNorm())) {
      walk(na.left, ib);
      walk(na.right, ib);
    } else {
      walk(ia, nb.left);
      walk(ia, nb.right);
    }
  }
};

bool meshes_intersect(const TriMesh& a, const TriMesh& b) {
  if (a.empty() || b.empty()) return false;
  TriBvh ba(a), bb(b);
  CrossWalker w{ba, bb, a, b};
  w.walk(0, 0);
  return w.hit;
}

long TriBvh::self_intersection_count(const TriMesh& mesh) {
  if (mesh.empty()) return 0;
  TriBvh bvh(mesh);
  BvhPairWalker w{bvh, mesh};
  w.walk(0, 0);
  return w.count;
}

}  // namespace df
