#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "digitforge/primitives.hpp"
#include "digitforge/registration.hpp"
#include "test_support.hpp"

using namespace df;
using namespace testsupport;

namespace {

constexpr double kPi = 3.14159265358979323846;

RigidTransform axis_angle(const Vec3& axis, double deg, const Vec3& trans) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(deg * kPi / 180.0, axis.normalized()).toRotationMatrix();
  t.translation = trans;
  return t;
}

std::vector<Vec3> blob_points(int n, uint64_t seed) {
  // anisotropic cloud so principal axes are well defined
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.emplace_back(9.0 * u(rng), 4.0 * u(rng), 1.5 * u(rng));
  return pts;
}

}  // namespace

TEST_CASE("mirror plane sits midway between reflected shapes") {
  TriMesh right = make_box(Vec3(8, -2, -2), Vec3(12, 2, 2));
  TriMesh left = mirror_mesh(right, Plane(Vec3::Zero(), Vec3::UnitX()));
  Plane p = estimate_mirror_plane(left, right);
  CHECK(std::abs(p.normal.dot(Vec3::UnitX())) == doctest::Approx(1.0));
  CHECK(std::abs(p.signed_distance(Vec3::Zero())) < 1e-9);

  CHECK_THROWS_AS(estimate_mirror_plane(TriMesh{}, right), Error);
}

TEST_CASE("surface sampling is deterministic and on-surface") {
  TriMesh box = make_box(Vec3::Zero(), Vec3(2, 3, 4));
  auto a = sample_surface(box, 400, 7);
  auto b = sample_surface(box, 400, 7);
  REQUIRE(a.size() == 400);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  auto c = sample_surface(box, 400, 8);
  bool differs = false;
  for (size_t i = 0; i < c.size(); ++i) differs = differs || c[i] != a[i];
  CHECK(differs);

  MeshSdf sdf(box);
  double worst = 0.0;
  for (const auto& p : a) worst = std::max(worst, std::abs(sdf.signed_distance(p)));
  CHECK(worst < 1e-9);
}

TEST_CASE("icp on identical clouds stays at identity") {
  auto pts = blob_points(800, 3);
  IcpParams params;
  params.correspondence_cutoff_mm = 50.0;
  IcpResult r = icp_rigid(pts, pts, RigidTransform::identity(), params);
  CHECK(r.rms_mm < 1e-9);
  CHECK((r.transform.rotation - Mat3::Identity()).norm() < 1e-9);
  CHECK(r.transform.translation.norm() < 1e-9);
  CHECK(r.inliers == pts.size());
}

TEST_CASE("icp recovers a known rigid transform") {
  auto src = blob_points(1500, 5);
  RigidTransform truth = axis_angle(Vec3(0.3, -1.0, 0.7), 17.0, Vec3(6.0, -4.0, 2.5));
  std::vector<Vec3> dst;
  dst.reserve(src.size());
  for (const auto& p : src) dst.push_back(truth.apply(p));

  IcpParams params;
  params.correspondence_cutoff_mm = 100.0;
  params.max_iterations = 100;
  RigidTransform init = initial_alignment(src, dst);
  IcpResult r = icp_rigid(src, dst, init, params);
  CHECK(r.rms_mm < 1e-6);
  CHECK(angle_deg(r.transform.rotation, truth.rotation) < 0.01);
  CHECK((r.transform.translation - truth.translation).norm() < 0.01);

  for (size_t i = 1; i < r.rms_history.size(); ++i)
    CHECK(r.rms_history[i] <= r.rms_history[i - 1] + 1e-12);
}

TEST_CASE("icp converges under noise with monotone rms") {
  auto src = blob_points(1200, 9);
  RigidTransform truth = axis_angle(Vec3::UnitZ(), 10.0, Vec3(2, 1, -1));
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Vec3> dst;
  for (const auto& p : src)
    dst.push_back(truth.apply(p) + Vec3(noise(rng), noise(rng), noise(rng)));

  IcpParams params;
  params.correspondence_cutoff_mm = 30.0;
  IcpResult r = icp_rigid(src, dst, initial_alignment(src, dst), params);
  CHECK(r.rms_mm < 0.2);
  for (size_t i = 1; i < r.rms_history.size(); ++i)
    CHECK(r.rms_history[i] <= r.rms_history[i - 1] + 1e-12);
}

TEST_CASE("cutoff drops far outliers from the fit") {
  auto src = blob_points(600, 13);
  std::vector<Vec3> dst = src;
  for (int i = 0; i < 30; ++i) dst.push_back(Vec3(500.0 + i, 500.0, 500.0));

  IcpParams params;
  params.correspondence_cutoff_mm = 5.0;
  IcpResult r = icp_rigid(src, dst, RigidTransform::identity(), params);
  CHECK(r.rms_mm < 1e-9);
  CHECK(r.inliers == src.size());
}

TEST_CASE("degenerate inputs are rejected") {
  std::vector<Vec3> line;
  for (int i = 0; i < 100; ++i) line.emplace_back(i * 0.5, 0.0, 0.0);
  auto good = blob_points(100, 1);
  try {
    icp_rigid(line, good, RigidTransform::identity(), IcpParams{});
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::DegenerateGeometry);
  }
  CHECK_THROWS_AS(initial_alignment(good, line), Error);

  IcpParams bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(icp_rigid(good, good, RigidTransform::identity(), bad), Error);
}
