#include "digitforge/design.hpp"

#include <algorithm>
#include <cmath>

#include "digitforge/boolean.hpp"
#include "digitforge/cut.hpp"
#include "digitforge/isosurface.hpp"
#include "digitforge/primitives.hpp"
#include "digitforge/sdf.hpp"
#include "digitforge/validate.hpp"

namespace df {

void DesignParams::validate() const {
  if (!(sleeve_thickness_mm > 0.0))
    throw Error(Err::InvalidArgument, "sleeve thickness must be positive");
  if (fin_count < 3) throw Error(Err::InvalidArgument, "fin count must be at least 3");
  if (fit_clearance_mm < 0.0) throw Error(Err::InvalidArgument, "fit clearance must be >= 0");
  if (!(block_margin_mm > 0.0)) throw Error(Err::InvalidArgument, "block margin must be positive");
  if (!(voxel_mm > 0.0)) throw Error(Err::InvalidArgument, "voxel size must be positive");
  if (!(fin_width_mm > 0.0 && fin_thickness_mm > 0.0) || fin_length_mm < 0.0)
    throw Error(Err::InvalidArgument, "bad fin dimensions");
  if (!(connector.diameter_mm > 0.0 && connector.depth_mm > 0.0 &&
        connector.key_width_mm > 0.0 && connector.key_depth_mm > 0.0))
    throw Error(Err::InvalidArgument, "bad connector dimensions");
  if (!(screws.hole_diameter_mm > 0.0))
    throw Error(Err::InvalidArgument, "screw hole diameter must be positive");
  if (sprue_diameter_mm < 0.0) throw Error(Err::InvalidArgument, "sprue diameter must be >= 0");
}

namespace {

TriMesh component_nearest(const TriMesh& mesh, const Vec3& point) {
  auto comps = connected_components(mesh);
  if (comps.empty()) throw Error(Err::EmptyMesh, "no component survived the cut");
  size_t best = 0;
  double best_d2 = std::numeric_limits<double>::max();
  for (size_t c = 0; c < comps.size(); ++c) {
    for (const auto& v : comps[c].vertices) {
      double d2 = (v - point).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
  }
  return comps[best];
}

void require_plane_crosses(const TriMesh& mesh, const Plane& plane, const char* what) {
  bool neg = false, pos = false;
  for (const auto& v : mesh.vertices) {
    double d = plane.signed_distance(v);
    neg = neg || d < 0.0;
    pos = pos || d > 0.0;
    if (neg && pos) return;
  }
  throw Error(Err::DegenerateGeometry, std::string(what) + " plane misses the mesh");
}

struct PrincipalFrame {
  Vec3 center;
  Mat3 axes;  // columns, ascending variance
};

PrincipalFrame principal_frame(const TriMesh& mesh) {
  if (mesh.vertices.empty()) throw Error(Err::EmptyMesh, "principal frame of an empty mesh");
  Vec3 mean = Vec3::Zero();
  for (const auto& v : mesh.vertices) mean += v;
  mean /= static_cast<double>(mesh.vertices.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& v : mesh.vertices) cov += (v - mean) * (v - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return {mean, es.eigenvectors()};
}

}  // namespace

FingerModel build_finger_model(const TriMesh& contra_skin, const TriMesh& contra_bone,
                               const Plane& mirror, const Plane& crop, const TriMesh& stump_skin,
                               const IcpParams& icp) {
  if (contra_skin.empty() || contra_bone.empty() || stump_skin.empty())
    throw Error(Err::EmptyMesh, "finger model inputs must be non-empty");
  TriMesh skin_m = mirror_mesh(contra_skin, mirror);
  TriMesh bone_m = mirror_mesh(contra_bone, mirror);

  auto src = sample_surface(skin_m, icp.sample_count, 1);
  auto dst = sample_surface(stump_skin, icp.sample_count, 2);
  RigidTransform init = initial_alignment(src, dst);
  IcpResult reg = icp_rigid(src, dst, init, icp);

  TriMesh skin_p = transform_mesh(skin_m, reg.transform);
  TriMesh bone_p = transform_mesh(bone_m, reg.transform);
  require_plane_crosses(skin_p, crop, "crop");

  FingerModel out;
  out.pose = reg.transform;
  out.skin = component_nearest(cut_with_plane(skin_p, crop, true), crop.point);
  // recess the bone behind the crop face so it stays strictly inside the skin
  Plane bone_crop(crop.point - 0.2 * crop.normal, crop.normal);
  out.bone = component_nearest(cut_with_plane(bone_p, bone_crop, true), crop.point);

  MeshSdf skin_sdf(out.skin);
  for (const auto& v : out.bone.vertices)
    if (skin_sdf.signed_distance(v) >= 0.0)
      throw Error(Err::BoneOutsideSkin, "bone is not strictly inside the skin");
  return out;
}

SleeveResult design_sleeve(const TriMesh& stump_skin, const TriMesh&, const DesignParams& params) {
  params.validate();
  if (stump_skin.empty() || !is_closed(stump_skin))
    throw Error(Err::NonClosedInput, "sleeve design needs a closed stump mesh");
  const Plane& ext = params.extension_plane;
  require_plane_crosses(stump_skin, ext, "extension");

  TriMesh stub = component_nearest(cut_with_plane(stump_skin, ext, true), ext.point);

  SleeveResult out;
  double vox = params.voxel_mm;
  if (params.fit_clearance_mm > 0.0) {
    out.mould = cut_with_plane(offset_mesh(stub, params.fit_clearance_mm, vox), ext, true);
  } else {
    out.mould = stub;
  }
  out.outer = cut_with_plane(offset_mesh(out.mould, params.sleeve_thickness_mm, vox), ext, true);
  out.solid = boolean_op(out.outer, out.mould, BoolKind::Difference, vox);

  WallStats walls = sleeve_wall_stats(out, ext);
  if (walls.samples > 0 && walls.min_mm < 0.5 * params.sleeve_thickness_mm)
    throw Error(Err::ThicknessViolation, "sleeve wall thinner than half the target thickness");
  return out;
}

// Wall thickness as the distance from the outer surface to the inner surface.
// Ray chords would under-report at the trim rim, where the wall meets the
// extension plane in an acute wedge.
WallStats sleeve_wall_stats(const SleeveResult& sleeve, const Plane& extension, int max_samples) {
  WallStats w;
  if (sleeve.outer.empty() || sleeve.mould.empty()) return w;
  MeshSdf inner(sleeve.mould);
  std::vector<double> depths;
  size_t n = sleeve.outer.triangles.size();
  size_t stride = std::max<size_t>(1, n / static_cast<size_t>(max_samples));
  for (size_t i = 0; i < n; i += stride) {
    const auto& t = sleeve.outer.triangles[i];
    Vec3 c = (sleeve.outer.vertices[t[0]] + sleeve.outer.vertices[t[1]] +
              sleeve.outer.vertices[t[2]]) / 3.0;
    if (std::abs(extension.signed_distance(c)) < 0.5) continue;  // trim face and rim
    depths.push_back(std::abs(inner.signed_distance(c)));
  }
  if (depths.empty()) return w;
  std::sort(depths.begin(), depths.end());
  w.samples = depths.size();
  w.min_mm = depths.front();
  w.max_mm = depths.back();
  w.median_mm = depths[depths.size() / 2];
  return w;
}

std::pair<TriMesh, TriMesh> design_connector(const TriMesh& bone, const TriMesh& sleeve_mould,
                                             const DesignParams& params) {
  params.validate();
  const ConnectorSpec& c = params.connector;
  Vec3 w = c.axis_dir.normalized();
  auto axis_hits = [&](const TriMesh& m) {
    TriBvh bvh(m);
    return bvh.first_hit(c.axis_point, w).has_value() ||
           bvh.first_hit(c.axis_point, Vec3(-w)).has_value();
  };
  if (bone.empty() || sleeve_mould.empty() || !axis_hits(bone) || !axis_hits(sleeve_mould))
    throw Error(Err::AxisMiss, "connector axis does not intersect both parts");

  auto t_of = [&](const Vec3& v) { return w.dot(v - c.axis_point); };
  double core_top = -std::numeric_limits<double>::max();
  for (const auto& v : sleeve_mould.vertices) core_top = std::max(core_top, t_of(v));
  double bone_bot = std::numeric_limits<double>::max();
  for (const auto& v : bone.vertices) bone_bot = std::min(bone_bot, t_of(v));

  double r = 0.5 * c.diameter_mm;
  double cl = params.fit_clearance_mm;
  Vec3 rib_dir = perpendicular_frame(w).first;
  const double embed = 1.0;  // boss root buried so the union is robust

  TriMesh boss = make_keyed_cylinder(c.axis_point + (core_top - embed) * w, w, r,
                                     embed + c.depth_mm, c.key_width_mm, c.key_depth_mm, rib_dir);
  TriMesh sleeve_keyed = boolean_op(sleeve_mould, boss, BoolKind::Union, params.voxel_mm);

  TriMesh socket = make_keyed_cylinder(c.axis_point + (bone_bot - embed) * w, w, r + cl,
                                       embed + c.depth_mm + cl, c.key_width_mm + 2.0 * cl,
                                       c.key_depth_mm + cl, rib_dir);
  TriMesh bone_keyed = boolean_op(bone, socket, BoolKind::Difference, params.voxel_mm);
  return {bone_keyed, sleeve_keyed};
}

std::vector<TriMesh> design_fins(const TriMesh& cavity, const std::vector<TriMesh>& embedded,
                                 const DesignParams& params, std::vector<Vec3>* contact_normals) {
  params.validate();
  if (cavity.empty() || embedded.empty() || embedded[0].empty())
    throw Error(Err::EmptyMesh, "fins need a cavity and an embedded structure");
  if (!params.fin_normals.empty()) {
    if (static_cast<int>(params.fin_normals.size()) < params.fin_count)
      throw Error(Err::InvalidArgument, "fewer fin normals than fins");
    if (normal_rank(params.fin_normals) < 3)
      throw Error(Err::RankDeficient, "fin contact normals do not span 3D");
  }

  const TriMesh& ins = embedded[0];
  PrincipalFrame pf = principal_frame(ins);
  Vec3 w = pf.axes.col(2);
  auto [u, v] = perpendicular_frame(w);
  auto t_of = [&](const Vec3& p) { return w.dot(p - pf.center); };

  double t0 = std::numeric_limits<double>::max(), t1 = -t0;
  for (const auto& p : ins.vertices) {
    double t = t_of(p);
    t0 = std::min(t0, t);
    t1 = std::max(t1, t);
  }
  double t_fin = t0 + 0.75 * (t1 - t0);
  Vec3 station = pf.center + t_fin * w;

  auto radial_extent = [&](const TriMesh& m, double band) {
    double r = 0.0, r_any = 0.0;
    for (const auto& p : m.vertices) {
      Vec3 d = p - station;
      double rad = (d - w.dot(d) * w).norm();
      r_any = std::max(r_any, rad);
      if (std::abs(t_of(p) - t_fin) < band) r = std::max(r, rad);
    }
    return r > 0.0 ? r : r_any;
  };
  double r_ins = radial_extent(ins, 2.5);
  double r_wall = radial_extent(cavity, 2.5);
  double r_in = std::max(0.2, r_ins - 0.8);
  double len = params.fin_length_mm > 0.0 ? params.fin_length_mm : (r_wall + 2.5) - r_in;
  if (len <= 0.0) throw Error(Err::DegenerateGeometry, "fin length collapses");

  std::vector<TriMesh> fins;
  std::vector<Vec3> normals;
  for (int k = 0; k < params.fin_count; ++k) {
    double ang = 2.0 * M_PI * k / params.fin_count;
    Vec3 radial = std::cos(ang) * u + std::sin(ang) * v;
    Vec3 n;
    if (!params.fin_normals.empty()) {
      n = params.fin_normals[k] - params.fin_normals[k].dot(radial) * radial;
      if (n.norm() < 1e-9) n = w;
    } else {
      // one axial contact plus tangential contacts at distinct angles spans 3D
      n = (k == 0) ? w : Vec3(w.cross(radial));
    }
    n.normalize();
    normals.push_back(n);

    Vec3 wide = n.cross(radial);
    TriMesh fin = make_box(Vec3(-0.5 * len, -0.5 * params.fin_width_mm,
                                -0.5 * params.fin_thickness_mm),
                           Vec3(0.5 * len, 0.5 * params.fin_width_mm,
                                0.5 * params.fin_thickness_mm));
    RigidTransform pose;
    pose.rotation.col(0) = radial;
    pose.rotation.col(1) = wide;
    pose.rotation.col(2) = n;
    pose.translation = station + (r_in + 0.5 * len) * radial;
    fins.push_back(transform_mesh(fin, pose));
  }
  if (normal_rank(normals) < 3)
    throw Error(Err::RankDeficient, "could not place a rank-3 fin set");
  if (contact_normals) *contact_normals = normals;
  return fins;
}

Plane default_split_plane(const TriMesh& cavity) {
  PrincipalFrame pf = principal_frame(cavity);
  return Plane(pf.center, pf.axes.col(0));
}

int normal_rank(const std::vector<Vec3>& normals, double tolerance) {
  if (normals.empty()) return 0;
  Eigen::MatrixXd m(3, normals.size());
  int cols = 0;
  for (const auto& n : normals) {
    if (n.norm() < 1e-12) continue;
    m.col(cols++) = n.normalized();
  }
  if (cols == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.leftCols(cols));
  double top = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tolerance * std::max(top, 1.0)) ++rank;
  return rank;
}

MouldAssembly split_mould(const TriMesh& cavity, const std::vector<TriMesh>& inserts,
                          const DesignParams& params) {
  params.validate();
  if (cavity.empty() || !is_closed(cavity))
    throw Error(Err::NonClosedInput, "mould cavity must be a closed mesh");
  for (const auto& ins : inserts)
    if (!ins.empty() && !is_closed(ins))
      throw Error(Err::NonClosedInput, "mould insert must be a closed mesh");

  Plane split = params.split_plane_auto ? default_split_plane(cavity) : params.split_plane;
  Vec3 sn = split.normal.normalized();

  // Orient the block to the parting plane so the plane meets the faces
  // squarely; an axis-aligned block can catch the plane along an edge and
  // leave a knife-thin sliver on one half. The u axis follows the cavity's
  // long axis so the sprue exits through a face it is nearly normal to.
  PrincipalFrame pf = principal_frame(cavity);
  Vec3 bu = pf.axes.col(2) - pf.axes.col(2).dot(sn) * sn;
  if (bu.norm() < 1e-9) bu = perpendicular_frame(sn).first;
  bu.normalize();
  Mat3 frame;
  frame.col(0) = bu;
  frame.col(1) = sn.cross(bu);
  frame.col(2) = sn;

  Vec3 lmin = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 lmax = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (const auto& p : cavity.vertices) {
    Vec3 q = frame.transpose() * (p - split.point);
    lmin = lmin.cwiseMin(q);
    lmax = lmax.cwiseMax(q);
  }
  if (!(lmin.z() < 0.0 && lmax.z() > 0.0))
    throw Error(Err::SplitMiss, "split plane does not cross the mould block");
  lmin -= Vec3::Constant(params.block_margin_mm);
  lmax += Vec3::Constant(params.block_margin_mm);
  Vec3 lc = 0.5 * (lmin + lmax), lh = 0.5 * (lmax - lmin);
  Vec3 bc = split.point + frame * lc;
  Aabb block_bb;  // world-aligned extraction bounds around the oriented block
  for (int corner = 0; corner < 8; ++corner) {
    Vec3 sgn((corner & 1) ? 1.0 : -1.0, (corner & 2) ? 1.0 : -1.0, (corner & 4) ? 1.0 : -1.0);
    block_bb.expand(Vec3(bc + frame * lh.cwiseProduct(sgn)));
  }

  // screw holes: through-cylinders along the split normal
  std::vector<Vec3> screw_pts = params.screws.positions;
  if (screw_pts.empty()) {
    double inset = 0.5 * params.block_margin_mm;
    for (int su = -1; su <= 1; su += 2)
      for (int sv = -1; sv <= 1; sv += 2)
        screw_pts.push_back(bc + su * (lh.x() - inset) * frame.col(0) +
                            sv * (lh.y() - inset) * frame.col(1));
  }
  double hn = std::abs(lc.z()) + lh.z();
  struct Cyl {
    Vec3 a, b;
    double r;
  };
  std::vector<Cyl> holes;
  for (const auto& q : screw_pts) {
    Vec3 on_plane = q - split.signed_distance(q) * sn;
    holes.push_back({on_plane - (hn + 2.0) * sn, on_plane + (hn + 2.0) * sn,
                     0.5 * params.screws.hole_diameter_mm});
  }
  if (params.sprue_diameter_mm > 0.0) {
    Vec3 w = pf.axes.col(2);
    if (w.dot(params.extension_plane.normal) > 0.0) w = -w;
    double t_top = -std::numeric_limits<double>::max();
    for (const auto& p : cavity.vertices) t_top = std::max(t_top, w.dot(p - pf.center));
    // run the channel out past the block's support plane along w
    double t_exit = w.dot(bc - pf.center) + lh.x() * std::abs(w.dot(frame.col(0))) +
                    lh.y() * std::abs(w.dot(frame.col(1))) + lh.z() * std::abs(w.dot(frame.col(2)));
    holes.push_back({pf.center + (t_top - 2.0) * w, pf.center + (t_exit + 2.0) * w,
                     0.5 * params.sprue_diameter_mm});
  }

  MouldAssembly out;
  if (!inserts.empty()) out.bone_insert = inserts[0];
  if (inserts.size() > 1) out.sleeve_mould = inserts[1];

  std::vector<const TriMesh*> carve_meshes;
  for (const auto& ins : inserts)
    if (!ins.empty()) carve_meshes.push_back(&ins);

  RigidTransform to_world;
  to_world.rotation = frame;
  to_world.translation = split.point;
  TriMesh block = transform_mesh(make_box(lmin, lmax), to_world);
  if (carve_meshes.empty() && holes.empty()) {
    // no re-meshing needed: exact plane cuts, exact nested/disjoint differences
    Plane flipped(split.point, -split.normal);
    out.mould_half_a = boolean_op(cut_with_plane(block, split, true), cavity,
                                  BoolKind::Difference, params.voxel_mm);
    out.mould_half_b = boolean_op(cut_with_plane(block, flipped, true), cavity,
                                  BoolKind::Difference, params.voxel_mm);
    out.finger_preview = cavity;
    return out;
  }

  MeshSdf cav_sdf(cavity);
  std::vector<MeshSdf> insert_sdfs;
  insert_sdfs.reserve(carve_meshes.size());
  for (const auto* m : carve_meshes) insert_sdfs.emplace_back(*m);

  double cl = params.fit_clearance_mm;
  auto hole_sdf = [&](const Vec3& p) {
    double d = std::numeric_limits<double>::max();
    for (const auto& h : holes) d = std::min(d, sdf_capped_cylinder(p, h.a, h.b, h.r));
    return d;
  };

  double vox = params.voxel_mm;
  for (int side = 0; side < 2; ++side) {
    CoherentSdf cav(cav_sdf);
    std::vector<CoherentSdf> insc(insert_sdfs.begin(), insert_sdfs.end());
    ScalarField field = [&](const Vec3& p) {
      double d = sdf_box(frame.transpose() * (p - split.point), lc, lh);
      double dp = split.signed_distance(p);
      d = std::max(d, side == 0 ? dp : -dp);
      if (d > 2.0 * vox) return d;
      double carve = cav(p);
      for (auto& s : insc) carve = std::min(carve, s(p) - cl);
      carve = std::min(carve, hole_sdf(p));
      return std::max(d, -carve);
    };
    TriMesh half = mesh_from_analytic_sdf(field, block_bb, vox);
    half = drop_small_components(half, vox * vox * vox);
    if (half.empty() || !is_closed(half))
      throw Error(Err::RobustnessFailure, "mould half re-mesh failed");
    (side == 0 ? out.mould_half_a : out.mould_half_b) = half;
  }

  {
    CoherentSdf cav(cav_sdf);
    std::vector<CoherentSdf> insc(insert_sdfs.begin(), insert_sdfs.end());
    // Inserts are subtracted with the fit clearance, matching the pockets in
    // the halves. Otherwise the clearance gap where the connector boss seats
    // in its socket shows up as a sub-voxel film of cast material.
    ScalarField field = [&](const Vec3& p) {
      double d = cav(p);
      for (auto& s : insc) d = std::max(d, cl - s(p));
      return d;
    };
    TriMesh preview = mesh_from_analytic_sdf(field, cavity.bounds(), vox);
    preview = drop_small_components(preview, vox * vox * vox);
    if (preview.empty() || !is_closed(preview))
      throw Error(Err::RobustnessFailure, "finger preview re-mesh failed");
    out.finger_preview = preview;
  }
  return out;
}

double silicone_cavity_volume(const MouldAssembly& assembly, double voxel) {
  if (assembly.finger_preview.empty()) return 0.0;
  double v = std::abs(signed_volume(assembly.finger_preview));
  if (!assembly.bone_insert.empty())
    v -= intersection_volume(assembly.finger_preview, assembly.bone_insert, voxel);
  if (!assembly.sleeve_mould.empty())
    v -= intersection_volume(assembly.finger_preview, assembly.sleeve_mould, voxel);
  return std::max(0.0, v);
}

double max_pairwise_interference(const MouldAssembly& assembly, double voxel) {
  const TriMesh* parts[] = {&assembly.mould_half_a, &assembly.mould_half_b,
                            &assembly.sleeve_mould, &assembly.bone_insert,
                            &assembly.finger_preview};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) {
      if (parts[i]->empty() || parts[j]->empty()) continue;
      worst = std::max(worst, intersection_volume(*parts[i], *parts[j], voxel));
    }
  return worst;
}

bool sleeve_mould_separates(const MouldAssembly& assembly, const Vec3& axis, double travel,
                            int stations, double voxel) {
  if (assembly.sleeve_mould.empty() || assembly.bone_insert.empty()) return true;
  Vec3 dir = axis.normalized();
  for (int s = 0; s < stations; ++s) {
    double dist = travel * s / std::max(1, stations - 1);
    RigidTransform shift;
    shift.translation = -dist * dir;
    TriMesh moved = transform_mesh(assembly.sleeve_mould, shift);
    if (intersection_volume(moved, assembly.bone_insert, voxel) > tol::part_interference)
      return false;
  }
  return true;
}

}  // namespace df
