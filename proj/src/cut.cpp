#include "digitforge/cut.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace df {

namespace {

using Vec2 = Eigen::Vector2d;

double loop_area(const std::vector<int>& loop, const std::vector<Vec2>& pts) {
  double a = 0.0;
  for (size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = pts[loop[i]];
    const Vec2& q = pts[loop[(i + 1) % loop.size()]];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

bool point_in_loop(const Vec2& p, const std::vector<int>& loop, const std::vector<Vec2>& pts) {
  bool inside = false;
  for (size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
    const Vec2& a = pts[loop[i]];
    const Vec2& b = pts[loop[j]];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  double d1 = cross2(a, b, p), d2 = cross2(b, c, p), d3 = cross2(c, a, p);
  bool neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
  bool pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
  return !(neg && pos);
}

// Splices a hole loop into an outer loop through a bridge from the hole's
// rightmost vertex to a visible outer vertex (earcut-style).
void merge_hole(std::vector<int>& outer, const std::vector<int>& hole,
                const std::vector<Vec2>& pts) {
  size_t hm = 0;
  for (size_t i = 1; i < hole.size(); ++i)
    if (pts[hole[i]].x() > pts[hole[hm]].x()) hm = i;
  const Vec2& m = pts[hole[hm]];

  // closest edge intersection of the +x ray from m
  double best_x = std::numeric_limits<double>::max();
  size_t bridge = outer.size();
  for (size_t i = 0; i < outer.size(); ++i) {
    const Vec2& a = pts[outer[i]];
    const Vec2& b = pts[outer[(i + 1) % outer.size()]];
    if ((a.y() > m.y()) == (b.y() > m.y())) continue;
    double x = a.x() + (m.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
    if (x >= m.x() && x < best_x) {
      best_x = x;
      bridge = a.x() > b.x() ? i : (i + 1) % outer.size();
    }
  }
  if (bridge == outer.size()) {
    // degenerate; connect to the overall rightmost outer vertex
    bridge = 0;
    for (size_t i = 1; i < outer.size(); ++i)
      if (pts[outer[i]].x() > pts[outer[bridge]].x()) bridge = i;
  } else {
    // prefer a reflex-free connection: if any outer vertex sits inside the
    // candidate triangle, take the one closest in angle to the ray
    Vec2 ip(best_x, m.y());
    const Vec2& p = pts[outer[bridge]];
    double best_metric = std::numeric_limits<double>::max();
    size_t alt = bridge;
    for (size_t i = 0; i < outer.size(); ++i) {
      if (i == bridge) continue;
      const Vec2& q = pts[outer[i]];
      if (q.x() < m.x() || q.x() > std::max(best_x, p.x())) continue;
      if (!point_in_triangle(q, m, ip, p)) continue;
      double metric = std::abs(q.y() - m.y()) + (q.x() - m.x());
      if (metric < best_metric) {
        best_metric = metric;
        alt = i;
      }
    }
    bridge = alt;
  }

  std::vector<int> merged;
  merged.reserve(outer.size() + hole.size() + 2);
  for (size_t i = 0; i <= outer.size(); ++i) {
    merged.push_back(outer[i % outer.size()]);
    if (i % outer.size() == bridge && i < outer.size()) {
      for (size_t j = 0; j <= hole.size(); ++j)
        merged.push_back(hole[(hm + j) % hole.size()]);
      merged.push_back(outer[bridge]);
    }
  }
  merged.pop_back();  // drop duplicated closing vertex
  outer = std::move(merged);
}

// Ear clipping of a simple polygon (CCW). Appends index triangles.
void ear_clip(std::vector<int> poly, const std::vector<Vec2>& pts,
              std::vector<std::array<int, 3>>& out) {
  int guard = 0;
  while (poly.size() > 3) {
    bool clipped = false;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& a = pts[poly[(i + n - 1) % n]];
      const Vec2& b = pts[poly[i]];
      const Vec2& c = pts[poly[(i + 1) % n]];
      double conv = cross2(a, b, c);
      if (conv <= 0.0) continue;  // reflex or collinear
      bool ear = true;
      for (size_t j = 0; j < n; ++j) {
        if (j == i || j == (i + n - 1) % n || j == (i + 1) % n) continue;
        const Vec2& q = pts[poly[j]];
        if (point_in_triangle(q, a, b, c) && (q - a).norm() > 0 && (q - b).norm() > 0 &&
            (q - c).norm() > 0) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      out.push_back({poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]});
      poly.erase(poly.begin() + static_cast<long>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // numerically stuck: clip the most convex vertex to guarantee progress
      size_t best = 0;
      double best_conv = -std::numeric_limits<double>::max();
      for (size_t i = 0; i < poly.size(); ++i) {
        size_t m = poly.size();
        double conv = cross2(pts[poly[(i + m - 1) % m]], pts[poly[i]], pts[poly[(i + 1) % m]]);
        if (conv > best_conv) {
          best_conv = conv;
          best = i;
        }
      }
      size_t m = poly.size();
      out.push_back({poly[(best + m - 1) % m], poly[best], poly[(best + 1) % m]});
      poly.erase(poly.begin() + static_cast<long>(best));
    }
    if (++guard > 1000000) throw Error(Err::RobustnessFailure, "cap triangulation did not terminate");
  }
  if (poly.size() == 3) out.push_back({poly[0], poly[1], poly[2]});
}

}  // namespace

TriMesh cut_with_plane(const TriMesh& mesh, const Plane& plane, bool cap) {
  if (mesh.empty()) return mesh;
  if (cap && !is_closed(mesh))
    throw Error(Err::NonClosedInput, "capped cut requires a closed mesh");

  std::vector<double> dist(mesh.vertices.size());
  bool any_kept = false, any_cut = false;
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    dist[i] = plane.signed_distance(mesh.vertices[i]);
    (dist[i] <= 0.0 ? any_kept : any_cut) = true;
  }
  if (!any_cut) return mesh;
  if (!any_kept) return TriMesh{};

  TriMesh out;
  out.vertices = mesh.vertices;
  std::unordered_map<uint64_t, int> edge_cut;  // undirected edge -> split vertex
  auto crossing = [&](int a, int b) {
    int lo = std::min(a, b), hi = std::max(a, b);
    uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(lo)) << 32) |
                   static_cast<uint32_t>(hi);
    auto it = edge_cut.find(key);
    if (it != edge_cut.end()) return it->second;
    double t = dist[lo] / (dist[lo] - dist[hi]);
    Vec3 p = out.vertices[lo] + t * (out.vertices[hi] - out.vertices[lo]);
    int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    edge_cut.emplace(key, idx);
    return idx;
  };

  for (const auto& t : mesh.triangles) {
    // Sutherland-Hodgman against the kept half-space d <= 0
    int poly[8];
    int np = 0;
    for (int e = 0; e < 3; ++e) {
      int p = t[e], q = t[(e + 1) % 3];
      bool pk = dist[p] <= 0.0, qk = dist[q] <= 0.0;
      if (qk) {
        if (!pk) poly[np++] = crossing(p, q);
        poly[np++] = q;
      } else if (pk) {
        poly[np++] = crossing(p, q);
      }
    }
    // drop consecutive duplicates (on-plane vertices)
    int clean[8];
    int nc = 0;
    for (int i = 0; i < np; ++i) {
      int v = poly[i];
      if (nc > 0 && clean[nc - 1] == v) continue;
      clean[nc++] = v;
    }
    while (nc > 1 && clean[0] == clean[nc - 1]) --nc;
    for (int i = 2; i < nc; ++i) out.triangles.push_back({clean[0], clean[i - 1], clean[i]});
  }

  if (cap) {
    // boundary edges of the kept surface, reversed, are the cap boundary
    std::unordered_map<uint64_t, int> directed;
    auto dkey = [](int a, int b) {
      return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
    };
    for (const auto& t : out.triangles)
      for (int e = 0; e < 3; ++e) ++directed[dkey(t[e], t[(e + 1) % 3])];
    std::unordered_multimap<int, int> next;  // reversed boundary edges
    for (const auto& [k, c] : directed) {
      (void)c;
      int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
      if (directed.find(dkey(b, a)) == directed.end()) next.emplace(b, a);
    }
    // chain loops
    std::vector<std::vector<int>> loops;
    while (!next.empty()) {
      auto it = next.begin();
      std::vector<int> loop{it->first};
      int cur = it->second;
      next.erase(it);
      while (cur != loop.front()) {
        loop.push_back(cur);
        auto n = next.find(cur);
        if (n == next.end())
          throw Error(Err::RobustnessFailure, "open cut boundary while capping");
        cur = n->second;
        next.erase(n);
      }
      if (loop.size() >= 3) loops.push_back(std::move(loop));
    }

    if (!loops.empty()) {
      // project onto an in-plane right-handed basis (e1, e2, n)
      Vec3 n = plane.normal;
      Vec3 e1 = std::abs(n.x()) < 0.9 ? Vec3::UnitX().cross(n).normalized()
                                      : Vec3::UnitY().cross(n).normalized();
      Vec3 e2 = n.cross(e1);
      std::vector<Vec2> pts(out.vertices.size());
      for (auto& loop : loops)
        for (int v : loop)
          pts[v] = Vec2(e1.dot(out.vertices[v] - plane.point), e2.dot(out.vertices[v] - plane.point));

      std::vector<size_t> outers, holes;
      std::vector<double> areas(loops.size());
      for (size_t i = 0; i < loops.size(); ++i) {
        areas[i] = loop_area(loops[i], pts);
        (areas[i] >= 0.0 ? outers : holes).push_back(i);
      }
      // attach each hole to the smallest containing outer
      std::vector<std::vector<size_t>> holes_of(loops.size());
      for (size_t h : holes) {
        size_t best = loops.size();
        for (size_t o : outers) {
          if (!point_in_loop(pts[loops[h][0]], loops[o], pts)) continue;
          if (best == loops.size() || areas[o] < areas[best]) best = o;
        }
        if (best < loops.size()) holes_of[best].push_back(h);
      }
      for (size_t o : outers) {
        std::vector<int> poly = loops[o];
        // merge holes right-to-left
        std::sort(holes_of[o].begin(), holes_of[o].end(), [&](size_t a, size_t b) {
          auto maxx = [&](size_t h) {
            double mx = -std::numeric_limits<double>::max();
            for (int v : loops[h]) mx = std::max(mx, pts[v].x());
            return mx;
          };
          return maxx(a) > maxx(b);
        });
        for (size_t h : holes_of[o]) merge_hole(poly, loops[h], pts);
        ear_clip(std::move(poly), pts, out.triangles);
      }
    }
  }

  // compact unused vertices
  std::vector<int> remap(out.vertices.size(), -1);
  TriMesh compact;
  for (auto& t : out.triangles) {
    for (int e = 0; e < 3; ++e) {
      int v = t[e];
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(compact.vertices.size());
        compact.vertices.push_back(out.vertices[v]);
      }
      t[e] = remap[v];
    }
    compact.triangles.push_back(t);
  }
  return compact;
}

}  // namespace df
