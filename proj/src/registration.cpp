#include "digitforge/registration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace df {

namespace {

// Minimal 3D kd-tree over an immutable point set.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Vec3>& pts) : pts_(pts) {
    order_.resize(pts.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!pts.empty()) build(0, pts.size(), 0);
  }

  // index of the nearest point and its squared distance
  std::pair<int, double> nearest(const Vec3& q) const {
    best_ = -1;
    best_d2_ = std::numeric_limits<double>::max();
    search(q, 0, pts_.size(), 0);
    return {best_, best_d2_};
  }

 private:
  const std::vector<Vec3>& pts_;
  std::vector<int> order_;
  mutable int best_ = -1;
  mutable double best_d2_ = 0.0;

  void build(size_t lo, size_t hi, int axis) {
    if (hi - lo <= 1) return;
    size_t mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                       return a < b;  // deterministic ties
                     });
    build(lo, mid, (axis + 1) % 3);
    build(mid + 1, hi, (axis + 1) % 3);
  }

  void search(const Vec3& q, size_t lo, size_t hi, int axis) const {
    if (lo >= hi) return;
    size_t mid = (lo + hi) / 2;
    int idx = order_[mid];
    double d2 = (pts_[idx] - q).squaredNorm();
    if (d2 < best_d2_ || (d2 == best_d2_ && idx < best_)) {
      best_d2_ = d2;
      best_ = idx;
    }
    double delta = q[axis] - pts_[idx][axis];
    size_t first_lo = delta <= 0.0 ? lo : mid + 1;
    size_t first_hi = delta <= 0.0 ? mid : hi;
    size_t second_lo = delta <= 0.0 ? mid + 1 : lo;
    size_t second_hi = delta <= 0.0 ? hi : mid;
    search(q, first_lo, first_hi, (axis + 1) % 3);
    if (delta * delta < best_d2_) search(q, second_lo, second_hi, (axis + 1) % 3);
  }
};

void require_not_degenerate(const std::vector<Vec3>& pts, const char* role) {
  if (pts.size() < 3)
    throw Error(Err::DegenerateGeometry, std::string(role) + " needs at least 3 points");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  if (es.eigenvalues()(1) <= 1e-12 * std::max(es.eigenvalues()(2), 1e-300))
    throw Error(Err::DegenerateGeometry, std::string(role) + " points are collinear");
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() > 0 ? 1.0 : -1.0;
  return u * d * v.transpose();
}

RigidTransform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  Vec3 sc = Vec3::Zero(), dc = Vec3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    sc += src[i];
    dc += dst[i];
  }
  sc /= static_cast<double>(src.size());
  dc /= static_cast<double>(src.size());
  Mat3 h = Mat3::Zero();
  for (size_t i = 0; i < src.size(); ++i) h += (src[i] - sc) * (dst[i] - dc).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() > 0 ? 1.0 : -1.0;
  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = dc - t.rotation * sc;
  return t;
}

}  // namespace

Plane estimate_mirror_plane(const TriMesh& left, const TriMesh& right) {
  if (left.empty() || right.empty())
    throw Error(Err::EmptyMesh, "mirror plane estimation needs two non-empty meshes");
  Vec3 cl = area_centroid(left), cr = area_centroid(right);
  Vec3 diff = cr - cl;
  int axis = 0;
  diff.cwiseAbs().maxCoeff(&axis);
  if (std::abs(diff[axis]) < 1e-9)
    throw Error(Err::DegenerateGeometry, "meshes are coincident, no separation axis");
  Vec3 normal = Vec3::Zero();
  normal[axis] = diff[axis] > 0 ? 1.0 : -1.0;
  return Plane(0.5 * (cl + cr), normal);
}

std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, uint64_t seed) {
  if (mesh.empty() || count <= 0) return {};
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    total += 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                       .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                       .norm();
    cum[i] = total;
  }
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (int s = 0; s < count; ++s) {
    double u = unit() * total;
    size_t ti = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (ti >= mesh.triangles.size()) ti = mesh.triangles.size() - 1;
    const auto& t = mesh.triangles[ti];
    double r1 = std::sqrt(unit()), r2 = unit();
    double a = 1.0 - r1, b = r1 * (1.0 - r2), c = r1 * r2;
    pts.push_back(a * mesh.vertices[t[0]] + b * mesh.vertices[t[1]] + c * mesh.vertices[t[2]]);
  }
  return pts;
}

RigidTransform initial_alignment(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
  require_not_degenerate(source, "source");
  require_not_degenerate(target, "target");
  auto moments = [](const std::vector<Vec3>& pts) {
    Vec3 mean = Vec3::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Mat3 axes = es.eigenvectors();  // ascending eigenvalues
    return std::make_pair(mean, axes);
  };
  auto [sc, sa] = moments(source);
  auto [tc, ta] = moments(target);

  KdTree3 tree(target);
  size_t stride = std::max<size_t>(1, source.size() / 500);
  RigidTransform best;
  double best_cost = std::numeric_limits<double>::max();
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sy = -1; sy <= 1; sy += 2) {
      Mat3 flip = Mat3::Identity();
      flip(0, 0) = sx;
      flip(1, 1) = sy;
      Mat3 r = ta * flip * sa.transpose();
      if (r.determinant() < 0) {
        flip(2, 2) = -1;
        r = ta * flip * sa.transpose();
      }
      RigidTransform cand;
      cand.rotation = orthonormalize(r);
      cand.translation = tc - cand.rotation * sc;
      double cost = 0.0;
      for (size_t i = 0; i < source.size(); i += stride)
        cost += tree.nearest(cand.apply(source[i])).second;
      if (cost < best_cost) {
        best_cost = cost;
        best = cand;
      }
    }
  return best;
}

IcpResult icp_rigid(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                    const RigidTransform& init, const IcpParams& params) {
  if (params.max_iterations < 1 || !(params.convergence_mm > 0.0) ||
      !(params.correspondence_cutoff_mm > 0.0))
    throw Error(Err::InvalidArgument, "bad ICP parameters");
  require_not_degenerate(source, "source");
  require_not_degenerate(target, "target");
  if (!init.valid()) throw Error(Err::InvalidArgument, "initial transform is not rigid");

  KdTree3 tree(target);
  IcpResult res;
  res.transform = init;
  double cutoff2 = params.correspondence_cutoff_mm * params.correspondence_cutoff_mm;
  double prev_rms = std::numeric_limits<double>::max();

  std::vector<Vec3> corr_src, corr_dst;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    corr_src.clear();
    corr_dst.clear();
    for (const auto& s : source) {
      Vec3 p = res.transform.apply(s);
      auto [idx, d2] = tree.nearest(p);
      if (idx >= 0 && d2 <= cutoff2) {
        corr_src.push_back(s);
        corr_dst.push_back(target[idx]);
      }
    }
    if (corr_src.size() < 3)
      throw Error(Err::DegenerateGeometry, "fewer than 3 correspondences within cutoff");

    RigidTransform fit = kabsch(corr_src, corr_dst);
    fit.rotation = orthonormalize(fit.rotation);
    res.transform = fit;

    double se = 0.0;
    for (size_t i = 0; i < corr_src.size(); ++i)
      se += (res.transform.apply(corr_src[i]) - corr_dst[i]).squaredNorm();
    double rms = std::sqrt(se / static_cast<double>(corr_src.size()));
    res.rms_history.push_back(rms);
    res.rms_mm = rms;
    res.inliers = corr_src.size();
    res.iterations = iter + 1;
    if (std::abs(prev_rms - rms) < params.convergence_mm) break;
    prev_rms = rms;
  }
  return res;
}

}  // namespace df
