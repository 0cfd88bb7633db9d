#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "digitforge/boolean.hpp"
#include "digitforge/design.hpp"
#include "digitforge/primitives.hpp"
#include "digitforge/sdf.hpp"
#include "test_support.hpp"

using namespace df;
using namespace testsupport;

namespace {

constexpr double kPi = 3.14159265358979323846;

TriMesh rotate_about(const TriMesh& m, const Vec3& point, const Vec3& axis, double deg) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(deg * kPi / 180.0, axis.normalized()).toRotationMatrix();
  t.translation = point - t.rotation * point;
  return transform_mesh(m, t);
}

}  // namespace

TEST_CASE("normal_rank counts independent directions") {
  CHECK(normal_rank({}) == 0);
  CHECK(normal_rank({Vec3::UnitX(), Vec3::UnitX(), Vec3(-1, 0, 0)}) == 1);
  CHECK(normal_rank({Vec3::UnitX(), Vec3::UnitY(), Vec3(1, 1, 0).normalized()}) == 2);
  CHECK(normal_rank({Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}) == 3);
  CHECK(normal_rank({Vec3::Zero()}) == 0);
}

TEST_CASE("connector mates only in the keyed orientation") {
  DesignParams params;
  TriMesh core = make_box(Vec3(-6, -6, -10), Vec3(6, 6, 0));
  TriMesh bone = make_box(Vec3(-6, -6, 0.2), Vec3(6, 6, 10));
  auto [bone_keyed, core_keyed] = design_connector(bone, core, params);
  REQUIRE(is_closed(bone_keyed));
  REQUIRE(is_closed(core_keyed));
  // the boss must add material, the socket must remove it
  CHECK(signed_volume(core_keyed) > signed_volume(core));
  CHECK(signed_volume(bone_keyed) < signed_volume(bone));

  Vec3 axis = params.connector.axis_dir;
  Vec3 point = params.connector.axis_point;
  CHECK(intersection_volume(bone_keyed, core_keyed) <= 1.0);
  for (double deg : {90.0, 180.0, 270.0}) {
    TriMesh turned = rotate_about(bone_keyed, point, axis, deg);
    CHECK(intersection_volume(turned, core_keyed) > 1.0);
  }
}

TEST_CASE("connector axis must pierce both parts") {
  DesignParams params;
  params.connector.axis_point = Vec3(50, 0, 0);
  TriMesh core = make_box(Vec3(-6, -6, -10), Vec3(6, 6, 0));
  TriMesh bone = make_box(Vec3(-6, -6, 0.2), Vec3(6, 6, 10));
  try {
    design_connector(bone, core, params);
    FAIL("expected AxisMiss");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::AxisMiss);
  }
}

TEST_CASE("sleeve wall thickness follows the target") {
  DesignParams params;
  params.extension_plane = Plane(Vec3(0, 0, 2), -Vec3::UnitZ());
  TriMesh stump = make_capsule(Vec3(0, 0, -5), Vec3(0, 0, 25), 6.0);
  SleeveResult s = design_sleeve(stump, TriMesh{}, params);
  REQUIRE(is_closed(s.solid));
  REQUIRE(is_closed(s.mould));
  REQUIRE(is_closed(s.outer));
  CHECK(signed_volume(s.mould) > signed_volume(stump) * 0.3);

  WallStats w = sleeve_wall_stats(s, params.extension_plane);
  REQUIRE(w.samples > 100);
  CHECK(w.median_mm > 0.9 * params.sleeve_thickness_mm);
  CHECK(w.median_mm < 1.1 * params.sleeve_thickness_mm);
  CHECK(w.min_mm >= 0.5 * params.sleeve_thickness_mm);
}

TEST_CASE("fins span three contact directions") {
  DesignParams params;
  TriMesh cavity = make_capsule(Vec3(0, 0, 0), Vec3(0, 0, 30), 8.0);
  TriMesh bone = make_capsule(Vec3(0, 0, 2), Vec3(0, 0, 24), 3.0);
  std::vector<Vec3> normals;
  auto fins = design_fins(cavity, {bone}, params, &normals);
  REQUIRE(fins.size() == 3);
  REQUIRE(normals.size() == 3);
  CHECK(normal_rank(normals) == 3);
  for (const auto& f : fins) {
    REQUIRE(is_closed(f));
    // each fin must reach from inside the bone region out past the cavity wall
    CHECK(intersection_volume(f, cavity) > 0.0);
    CHECK(signed_volume(boolean_op(f, cavity, BoolKind::Difference)) > 0.0);
  }

  DesignParams flat = params;
  flat.fin_normals = {Vec3::UnitX(), Vec3::UnitX(), Vec3::UnitX()};
  try {
    design_fins(cavity, {bone}, flat, nullptr);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::RankDeficient);
  }
}

TEST_CASE("mould halves partition the block around the cavity") {
  DesignParams params;
  params.extension_plane = Plane(Vec3(0, 0, 2), -Vec3::UnitZ());
  params.sprue_diameter_mm = 0.0;
  TriMesh cavity = make_capsule(Vec3(0, 0, -5), Vec3(0, 0, 25), 6.0);
  MouldAssembly a = split_mould(cavity, {}, params);
  REQUIRE(is_closed(a.mould_half_a));
  REQUIRE(is_closed(a.mould_half_b));
  CHECK(signed_volume(a.mould_half_a) > 0.0);
  CHECK(signed_volume(a.mould_half_b) > 0.0);
  CHECK(intersection_volume(a.mould_half_a, a.mould_half_b) <= 1.0);
  // the halves close around the cavity without filling it
  CHECK(intersection_volume(a.mould_half_a, cavity) <= 1.0);
  CHECK(intersection_volume(a.mould_half_b, cavity) <= 1.0);
}

TEST_CASE("a split plane outside the block is rejected") {
  DesignParams params;
  params.split_plane_auto = false;
  params.split_plane = Plane(Vec3(0, 0, 100), Vec3::UnitZ());
  TriMesh cavity = make_capsule(Vec3(0, 0, -5), Vec3(0, 0, 25), 6.0);
  try {
    split_mould(cavity, {}, params);
    FAIL("expected SplitMiss");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::SplitMiss);
  }
}

TEST_CASE("finger model mirrors, registers, and crops") {
  TriMesh contra_skin = make_capsule(Vec3(15, 0, 0), Vec3(15, 0, 20), 4.0);
  TriMesh contra_bone = make_capsule(Vec3(15, 0, 0), Vec3(15, 0, 16), 2.0);
  Plane mirror(Vec3::Zero(), Vec3::UnitX());
  Plane crop(Vec3(-15, 0, 8), -Vec3::UnitZ());
  TriMesh stump = mirror_mesh(contra_skin, mirror);

  FingerModel fm = build_finger_model(contra_skin, contra_bone, mirror, crop, stump, IcpParams{});
  REQUIRE(is_closed(fm.skin));
  REQUIRE(is_closed(fm.bone));
  // the capsule is symmetric so the pose may flip; the surface must agree
  Vec3 a(-15, 0, 0), b(-15, 0, 20);
  double worst = 0.0;
  for (const auto& v : fm.skin.vertices) {
    if (std::abs(crop.signed_distance(v)) < 0.5) continue;
    worst = std::max(worst, std::abs(sdf_capsule(v, a, b, 4.0)));
  }
  CHECK(worst < 0.05);
  // only the distal side of the crop plane survives
  for (const auto& v : fm.skin.vertices) CHECK(crop.signed_distance(v) <= 1e-9);
  MeshSdf skin_sdf(fm.skin);
  for (const auto& v : fm.bone.vertices) CHECK(skin_sdf.signed_distance(v) < 0.0);
}

TEST_CASE("a bone thicker than the skin is rejected") {
  TriMesh contra_skin = make_capsule(Vec3(15, 0, 0), Vec3(15, 0, 20), 4.0);
  TriMesh fat_bone = make_capsule(Vec3(15, 0, 0), Vec3(15, 0, 16), 5.0);
  Plane mirror(Vec3::Zero(), Vec3::UnitX());
  Plane crop(Vec3(-15, 0, 8), -Vec3::UnitZ());
  TriMesh stump = mirror_mesh(contra_skin, mirror);
  try {
    build_finger_model(contra_skin, fat_bone, mirror, crop, stump, IcpParams{});
    FAIL("expected BoneOutsideSkin");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::BoneOutsideSkin);
  }
}
