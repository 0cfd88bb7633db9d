#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>

#include "digitforge/boolean.hpp"
#include "digitforge/cut.hpp"
#include "digitforge/design.hpp"
#include "digitforge/isosurface.hpp"
#include "digitforge/pipeline.hpp"
#include "digitforge/primitives.hpp"
#include "digitforge/registration.hpp"
#include "digitforge/sdf.hpp"
#include "digitforge/stl_io.hpp"
#include "digitforge/validate.hpp"
#include "digitforge/volume.hpp"
#include "test_support.hpp"

using namespace df;
using namespace testsupport;
using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

bool report(const char* name, bool ok) {
  std::printf("%s %s\n", ok ? "[PASS]" : "[FAIL]", name);
  std::fflush(stdout);
  return ok;
}

const std::array<const char*, 5> kParts = {"mould_half_a", "mould_half_b", "sleeve_mould",
                                           "bone_insert", "finger_preview"};

struct FullRun {
  std::filesystem::path dir;
  double seconds = 0.0;
  bool gates = false;
  json manifest;
  std::map<std::string, ValidationReport> reports;
};

const FullRun& run_a() {
  static FullRun r = [] {
    FullRun x;
    x.dir = fresh_dir("accept_a");
    PipelineConfig cfg;
    cfg.output_dir = x.dir;
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult res = run_pipeline(cfg);
    x.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    x.gates = res.gates_passed;
    std::ifstream m(res.manifest_path);
    m >> x.manifest;
    for (const char* part : kParts) {
      TriMesh mesh = read_stl(x.dir / (std::string(part) + ".stl"));
      x.reports[part] = validate_mesh(mesh);
    }
    return x;
  }();
  return r;
}

Plane plane_from_json(const json& j) {
  auto p = j.at("point_mm");
  auto n = j.at("normal");
  return Plane(Vec3(p[0], p[1], p[2]), Vec3(n[0], n[1], n[2]));
}

double unit_rand(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec3 random_unit(std::mt19937_64& rng) {
  while (true) {
    Vec3 v(2.0 * unit_rand(rng) - 1.0, 2.0 * unit_rand(rng) - 1.0, 2.0 * unit_rand(rng) - 1.0);
    double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

}  // namespace

TEST_CASE("criterion 1: default pipeline run is fast and prints clean parts") {
  const FullRun& r = run_a();
  bool ok = r.gates && r.seconds < 120.0;
  for (const char* part : kParts) {
    const ValidationReport& v = r.reports.at(part);
    ok = ok && v.closed && v.manifold && v.consistent_winding && v.self_intersections == 0 &&
         v.volume_mm3 > 0.0;
  }
  CHECK(report("criterion 1: end-to-end run under 120 s with five watertight parts", ok));
}

TEST_CASE("criterion 2: sleeve wall thickness stays in band") {
  const FullRun& r = run_a();
  SleeveResult s;
  s.mould = read_stl(r.dir / "sleeve_core.stl");
  s.outer = read_stl(r.dir / "sleeve_outer.stl");
  s.solid = read_stl(r.dir / "sleeve_solid.stl");
  Plane ext = plane_from_json(r.manifest.at("sleeve_wall").at("extension_plane"));
  WallStats w = sleeve_wall_stats(s, ext);
  bool ok = w.samples > 500 && w.median_mm >= 1.35 && w.median_mm <= 1.65 && w.min_mm >= 0.75;
  CHECK(report("criterion 2: sleeve wall median in [1.35, 1.65] mm, no sample under 0.75", ok));
}

TEST_CASE("criterion 3: posed finger matches the ground truth shape") {
  const FullRun& r = run_a();
  TriMesh finger = read_stl(r.dir / "finger_skin.stl");
  TriMesh truth = read_stl(r.dir / "true_finger_skin.stl");
  Plane crop = plane_from_json(r.manifest.at("registration").at("crop_plane"));
  TriMesh truth_cut = cut_with_plane(truth, crop, true);
  auto samples = sample_surface(finger, 3000, 17);
  double rms = rms_surface_distance(samples, truth_cut);
  CHECK(report("criterion 3: posed mirrored finger within 1.0 mm RMS of ground truth",
               rms <= 1.0));
}

TEST_CASE("criterion 4: icp recovers random rigid poses") {
  TriMesh box = make_box(Vec3(-10, -7, -4), Vec3(10, 7, 4));
  auto src = sample_surface(box, 5000, 23);
  std::mt19937_64 rng(71);
  bool ok = true;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    RigidTransform truth;
    truth.rotation =
        Eigen::AngleAxisd(unit_rand(rng) * 20.0 * kPi / 180.0, random_unit(rng)).toRotationMatrix();
    truth.translation = 10.0 * unit_rand(rng) * random_unit(rng);
    std::vector<Vec3> dst;
    dst.reserve(src.size());
    for (const auto& p : src) dst.push_back(truth.apply(p));

    IcpParams params;
    params.max_iterations = 100;
    params.correspondence_cutoff_mm = 100.0;
    IcpResult res = icp_rigid(src, dst, initial_alignment(src, dst), params);
    ok = ok && angle_deg(res.transform.rotation, truth.rotation) <= 0.1;
    ok = ok && (res.transform.translation - truth.translation).norm() <= 0.01;
    for (size_t i = 1; i < res.rms_history.size(); ++i)
      ok = ok && res.rms_history[i] <= res.rms_history[i - 1] + 1e-12;
  }
  CHECK(report("criterion 4: 100 random poses recovered to 0.1 deg / 0.01 mm, RMS monotone", ok));
}

TEST_CASE("criterion 5: booleans agree with a voxel-count oracle") {
  std::mt19937_64 rng(5);
  auto snap = [](double v) { return std::round(v / 0.25) * 0.25; };
  bool ok = true;
  for (int trial = 0; trial < 50 && ok; ++trial) {
    Vec3 amin(snap(2.0 * unit_rand(rng)), snap(2.0 * unit_rand(rng)), snap(2.0 * unit_rand(rng)));
    Vec3 asz(snap(1.5 + 2.0 * unit_rand(rng)), snap(1.5 + 2.0 * unit_rand(rng)),
             snap(1.5 + 2.0 * unit_rand(rng)));
    // second box anchored inside the first so the pair always overlaps
    Vec3 bmin = amin + Vec3(snap(asz.x() * unit_rand(rng)), snap(asz.y() * unit_rand(rng)),
                            snap(asz.z() * unit_rand(rng)));
    Vec3 bsz(snap(1.5 + 2.0 * unit_rand(rng)), snap(1.5 + 2.0 * unit_rand(rng)),
             snap(1.5 + 2.0 * unit_rand(rng)));
    TriMesh a = make_box(amin, amin + asz);
    TriMesh b = make_box(bmin, bmin + bsz);

    double vu = signed_volume(boolean_op(a, b, BoolKind::Union, 0.1));
    double vi = signed_volume(boolean_op(a, b, BoolKind::Intersection, 0.1));
    OracleBox oa{amin, amin + asz}, ob{bmin, bmin + bsz};
    Aabb both = a.bounds();
    both.expand(b.bounds());
    double ou = voxel_count_volume(
        both, [&](const Vec3& p) { return oa.contains(p) || ob.contains(p); });
    double oi = voxel_count_volume(
        both, [&](const Vec3& p) { return oa.contains(p) && ob.contains(p); });
    // errors measured against the pair's scale: a sliver intersection of a
    // quarter cubic millimetre would otherwise dominate the relative error
    ok = ok && std::abs(vu - ou) / ou <= 0.005;
    ok = ok && std::abs(vi - oi) / ou <= 0.005;
    double va = asz.prod(), vb = bsz.prod();
    ok = ok && std::abs(vu + vi - va - vb) <= 0.005 * (va + vb);
  }

  // exact identities
  TriMesh a = make_box(Vec3::Zero(), Vec3::Ones());
  TriMesh b = make_box(Vec3::Constant(5.0), Vec3::Constant(6.0));
  ok = ok && std::abs(signed_volume(boolean_op(a, b, BoolKind::Union)) - 2.0) <= 1e-6;
  ok = ok && boolean_op(a, b, BoolKind::Intersection).empty();
  ok = ok && std::abs(signed_volume(boolean_op(a, b, BoolKind::Difference)) - 1.0) <= 1e-6;
  ok = ok && boolean_op(a, a, BoolKind::Difference).empty();
  CHECK(report("criterion 5: 50 box pairs within 0.5% of the 0.25 mm oracle, identities exact",
               ok));
}

TEST_CASE("criterion 6: sphere extraction accuracy and convergence") {
  double r = 10.0;
  double true_vol = 4.0 / 3.0 * kPi * r * r * r;
  double true_area = 4.0 * kPi * r * r;
  Aabb b;
  b.expand(Vec3::Constant(-r - 2.0));
  b.expand(Vec3::Constant(r + 2.0));
  auto field = [r](const Vec3& p) { return p.norm() - r; };

  TriMesh coarse = mesh_from_analytic_sdf(field, b, 1.0);
  double v1 = signed_volume(coarse), a1 = surface_area(coarse);
  TriMesh fine = mesh_from_analytic_sdf(field, b, 0.5);
  double v2 = signed_volume(fine), a2 = surface_area(fine);

  bool ok = std::abs(v1 - true_vol) / true_vol <= 0.02 &&
            std::abs(a1 - true_area) / true_area <= 0.03 &&
            std::abs(v2 - true_vol) < std::abs(v1 - true_vol) &&
            std::abs(a2 - true_area) < std::abs(a1 - true_area);
  CHECK(report("criterion 6: sphere volume within 2%, area within 3%, halving the voxel helps",
               ok));
}

TEST_CASE("criterion 7: parts assemble with one keyed orientation and print safely") {
  const FullRun& r = run_a();
  bool ok = r.manifest.at("max_interference_mm3").get<double>() <= 1.0;
  for (const char* part : kParts) ok = ok && r.reports.at(part).min_feature_mm >= 0.1;

  std::ifstream mj(r.dir / "mould.json");
  json mould;
  mj >> mould;
  std::vector<Vec3> normals;
  for (const auto& n : mould.at("fin_contact_normals")) normals.emplace_back(n[0], n[1], n[2]);
  ok = ok && normal_rank(normals) == 3;

  auto axis_j = mould.at("connector_axis");
  auto point_j = mould.at("connector_axis_point_mm");
  Vec3 axis(axis_j[0], axis_j[1], axis_j[2]);
  Vec3 point(point_j[0], point_j[1], point_j[2]);
  TriMesh core = read_stl(r.dir / "sleeve_mould.stl");
  TriMesh bone = read_stl(r.dir / "bone_insert.stl");
  int mates = 0;
  for (double deg : {0.0, 90.0, 180.0, 270.0}) {
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(deg * kPi / 180.0, axis.normalized()).toRotationMatrix();
    t.translation = point - t.rotation * point;
    if (intersection_volume(transform_mesh(core, t), bone) <= 1.0) ++mates;
  }
  ok = ok && mates == 1;
  CHECK(report("criterion 7: interference <= 1 mm3, rank-3 fins, single keyed mating angle", ok));
}

TEST_CASE("criterion 8: file formats are exact and stable") {
  const FullRun& r = run_a();
  auto scratch = fresh_dir("accept_io");
  bool ok = true;
  for (const auto& entry : std::filesystem::directory_iterator(r.dir)) {
    if (entry.path().extension() != ".stl") continue;
    auto bytes = read_bytes(entry.path());
    ok = ok && bytes.size() >= 84;
    uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    ok = ok && bytes.size() == 84 + 50ull * count;
  }
  for (const char* part : kParts) {
    auto original = read_bytes(r.dir / (std::string(part) + ".stl"));
    TriMesh m = read_stl(r.dir / (std::string(part) + ".stl"));
    write_stl(m, scratch / "rewrite.stl");
    ok = ok && read_bytes(scratch / "rewrite.stl") == original;
  }

  VoxelVolume vol = load_raw_volume(r.dir / "volume.rvolh");
  save_raw_volume(vol, scratch / "volume.rvolh");
  ok = ok && read_bytes(scratch / "volume.rvol") == read_bytes(r.dir / "volume.rvol");
  VoxelVolume back = load_raw_volume(scratch / "volume.rvolh");
  ok = ok && back.samples.size() == vol.samples.size();
  for (size_t i = 0; ok && i < vol.samples.size(); ++i) ok = back.samples[i] == vol.samples[i];
  CHECK(report("criterion 8: STL sizes exact, write-read-write stable, raw volume bit-exact", ok));
}

TEST_CASE("criterion 9: reruns are byte-identical") {
  const FullRun& a = run_a();
  auto dir_b = fresh_dir("accept_b");
  PipelineConfig cfg;
  cfg.output_dir = dir_b;
  run_pipeline(cfg);
  bool ok = true;
  for (const char* part : kParts)
    ok = ok &&
         read_bytes(a.dir / (std::string(part) + ".stl")) ==
             read_bytes(dir_b / (std::string(part) + ".stl"));
  ok = ok && read_bytes(a.dir / "manifest.json") == read_bytes(dir_b / "manifest.json");
  CHECK(report("criterion 9: same config and seed reproduce parts and manifest byte for byte",
               ok));
}
