#include "digitforge/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <string>

#include "digitforge/boolean.hpp"
#include "digitforge/cut.hpp"
#include "digitforge/dicom.hpp"
#include "digitforge/isosurface.hpp"
#include "digitforge/stl_io.hpp"
#include "digitforge/validate.hpp"
#include "digitforge/volume.hpp"

namespace df {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json plane_json(const Plane& p) {
  return json{{"point_mm", {p.point.x(), p.point.y(), p.point.z()}},
              {"normal", {p.normal.x(), p.normal.y(), p.normal.z()}}};
}

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw Error(Err::InvalidArgument, std::string(what) + " must be a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Plane plane_from(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("point_mm") || !j.contains("normal"))
    throw Error(Err::InvalidArgument, std::string(what) + " needs point_mm and normal");
  return Plane(vec3_from(j.at("point_mm"), what), vec3_from(j.at("normal"), what));
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw Error(Err::InvalidArgument,
                  std::string("unknown key '") + key + "' in " + where);
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Err::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Err::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Err::IoFailure, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  out.close();
  if (!out) throw Error(Err::IoFailure, "write failed on " + path.string());
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::path probe = dir / ".writable";
  std::ofstream test(probe, std::ios::trunc);
  test << "ok";
  test.close();
  if (!test) throw Error(Err::IoFailure, "output directory is not writable: " + dir.string());
  fs::remove(probe, ec);
}

void require_artifact(const fs::path& path, const char* producer) {
  if (!fs::exists(path))
    throw Error(Err::MissingUpstreamArtifact,
                path.filename().string() + " is missing; run the '" + producer + "' stage first");
}

TriMesh read_mesh(const fs::path& path, const char* producer) {
  require_artifact(path, producer);
  return read_stl(path);
}

Plane resolve_plane(const std::optional<Plane>& configured, const fs::path& out_dir,
                    const char* truth_key, const char* what) {
  if (configured) return *configured;
  fs::path truth = out_dir / "phantom_truth.json";
  if (fs::exists(truth)) {
    json t = read_json_file(truth);
    if (t.contains(truth_key)) return plane_from(t.at(truth_key), what);
  }
  throw Error(Err::InvalidArgument, std::string(what) + " plane is required in the config");
}

// stage implementations -------------------------------------------------------

void stage_phantom(const PipelineConfig& cfg) {
  PhantomResult res = generate_phantom(cfg.phantom);
  save_raw_volume(res.volume, cfg.output_dir / "phantom.rvolh");
  write_stl(res.truth.true_finger_skin, cfg.output_dir / "true_finger_skin.stl");
  write_stl(res.truth.true_finger_bone, cfg.output_dir / "true_finger_bone.stl");
  json truth;
  truth["mirror_plane"] = plane_json(res.truth.mirror_plane);
  truth["crop_plane"] = plane_json(res.truth.crop_plane);
  truth["extension_plane"] = plane_json(res.truth.extension_plane);
  truth["finger_landmark"] = {res.truth.finger_landmark.x(), res.truth.finger_landmark.y(),
                              res.truth.finger_landmark.z()};
  write_json_file(truth, cfg.output_dir / "phantom_truth.json");
}

void stage_ingest(const PipelineConfig& cfg) {
  VoxelVolume vol;
  std::string source;
  switch (cfg.input_kind) {
    case InputKind::Dicom:
      vol = load_dicom_series(cfg.dicom_dir);
      source = "dicom:" + cfg.dicom_dir.string();
      break;
    case InputKind::Raw:
      require_artifact(cfg.raw_header, "external raw volume");
      vol = load_raw_volume(cfg.raw_header);
      source = "raw:" + cfg.raw_header.string();
      break;
    case InputKind::Phantom:
      require_artifact(cfg.output_dir / "phantom.rvolh", "phantom");
      vol = load_raw_volume(cfg.output_dir / "phantom.rvolh");
      source = "phantom";
      break;
  }
  save_raw_volume(vol, cfg.output_dir / "volume.rvolh");
  json info;
  info["source"] = source;
  info["dims"] = {vol.dims.x(), vol.dims.y(), vol.dims.z()};
  info["spacing_mm"] = {vol.spacing.x(), vol.spacing.y(), vol.spacing.z()};
  write_json_file(info, cfg.output_dir / "ingest.json");
}

void stage_mesh(const PipelineConfig& cfg) {
  require_artifact(cfg.output_dir / "volume.rvolh", "ingest");
  VoxelVolume vol = load_raw_volume(cfg.output_dir / "volume.rvolh");
  TriMesh skin = extract_isosurface(vol, {cfg.skin_iso_hu, cfg.min_component_mm3});
  TriMesh bone = extract_isosurface(vol, {cfg.bone_iso_hu, cfg.min_component_mm3});
  if (skin.empty() || bone.empty())
    throw Error(Err::EmptyMesh, "iso-surface extraction produced no geometry");
  write_stl(skin, cfg.output_dir / "skin.stl");
  write_stl(bone, cfg.output_dir / "bone.stl");
  json info;
  info["skin_iso_hu"] = cfg.skin_iso_hu;
  info["bone_iso_hu"] = cfg.bone_iso_hu;
  info["skin_triangles"] = skin.triangles.size();
  info["bone_triangles"] = bone.triangles.size();
  write_json_file(info, cfg.output_dir / "mesh.json");
}

void stage_mirror(const PipelineConfig& cfg) {
  TriMesh skin = read_mesh(cfg.output_dir / "skin.stl", "mesh");
  TriMesh bone = read_mesh(cfg.output_dir / "bone.stl", "mesh");

  auto comps = connected_components(skin);
  if (comps.size() < 2)
    throw Error(Err::DegenerateGeometry, "expected two hands in the skin surface");
  std::sort(comps.begin(), comps.end(), [](const TriMesh& a, const TriMesh& b) {
    return std::abs(signed_volume(a)) > std::abs(signed_volume(b));
  });
  const TriMesh& big = comps[0];
  const TriMesh& small = comps[1];

  Plane mirror = cfg.mirror_plane
                     ? *cfg.mirror_plane
                     : [&] {
                         fs::path truth = cfg.output_dir / "phantom_truth.json";
                         if (fs::exists(truth)) {
                           json t = read_json_file(truth);
                           if (t.contains("mirror_plane"))
                             return plane_from(t.at("mirror_plane"), "mirror");
                         }
                         return estimate_mirror_plane(small, big);
                       }();

  // the intact hand is the larger one
  const TriMesh& contra = big;
  const TriMesh& stump = small;
  double contra_side = mirror.signed_distance(area_centroid(contra));

  TriMesh contra_bone;
  for (const auto& bc : connected_components(bone)) {
    if (mirror.signed_distance(area_centroid(bc)) * contra_side > 0.0)
      contra_bone = append_meshes(contra_bone, bc);
  }
  if (contra_bone.empty())
    throw Error(Err::DegenerateGeometry, "no bone found on the contralateral side");

  write_stl(contra, cfg.output_dir / "contra_skin.stl");
  write_stl(contra_bone, cfg.output_dir / "contra_bone.stl");
  write_stl(stump, cfg.output_dir / "stump_skin.stl");
  json info;
  info["mirror_plane"] = plane_json(mirror);
  info["contra_volume_mm3"] = std::abs(signed_volume(contra));
  info["stump_volume_mm3"] = std::abs(signed_volume(stump));
  write_json_file(info, cfg.output_dir / "mirror.json");
}

void stage_register(const PipelineConfig& cfg) {
  TriMesh contra_skin = read_mesh(cfg.output_dir / "contra_skin.stl", "mirror");
  TriMesh contra_bone = read_mesh(cfg.output_dir / "contra_bone.stl", "mirror");
  TriMesh stump_skin = read_mesh(cfg.output_dir / "stump_skin.stl", "mirror");
  require_artifact(cfg.output_dir / "mirror.json", "mirror");
  Plane mirror = plane_from(read_json_file(cfg.output_dir / "mirror.json").at("mirror_plane"),
                            "mirror");
  Plane crop = resolve_plane(cfg.crop_plane, cfg.output_dir, "crop_plane", "crop");

  FingerModel model = build_finger_model(contra_skin, contra_bone, mirror, crop, stump_skin,
                                         cfg.icp);

  // re-run the registration numbers for the manifest
  auto src = sample_surface(mirror_mesh(contra_skin, mirror), cfg.icp.sample_count, 1);
  auto dst = sample_surface(stump_skin, cfg.icp.sample_count, 2);
  IcpResult reg = icp_rigid(src, dst, initial_alignment(src, dst), cfg.icp);

  write_stl(model.skin, cfg.output_dir / "finger_skin.stl");
  write_stl(model.bone, cfg.output_dir / "finger_bone.stl");
  json info;
  info["rms_mm"] = reg.rms_mm;
  info["iterations"] = reg.iterations;
  info["inliers"] = reg.inliers;
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(model.pose.rotation(r, c));
  info["pose_rotation"] = rot;
  info["pose_translation_mm"] = {model.pose.translation.x(), model.pose.translation.y(),
                                 model.pose.translation.z()};
  info["crop_plane"] = plane_json(crop);
  write_json_file(info, cfg.output_dir / "register.json");
}

void stage_sleeve(const PipelineConfig& cfg) {
  TriMesh stump_skin = read_mesh(cfg.output_dir / "stump_skin.stl", "mirror");
  TriMesh finger_skin = read_mesh(cfg.output_dir / "finger_skin.stl", "register");

  DesignParams params = cfg.design;
  params.extension_plane =
      resolve_plane(cfg.extension_plane, cfg.output_dir, "extension_plane", "extension");
  SleeveResult sleeve = design_sleeve(stump_skin, finger_skin, params);

  write_stl(sleeve.solid, cfg.output_dir / "sleeve_solid.stl");
  write_stl(sleeve.mould, cfg.output_dir / "sleeve_core.stl");
  write_stl(sleeve.outer, cfg.output_dir / "sleeve_outer.stl");
  WallStats walls = sleeve_wall_stats(sleeve, params.extension_plane);
  json info;
  info["thickness_mm"] = params.sleeve_thickness_mm;
  info["wall_median_mm"] = walls.median_mm;
  info["wall_min_mm"] = walls.min_mm;
  info["wall_max_mm"] = walls.max_mm;
  info["wall_samples"] = walls.samples;
  info["extension_plane"] = plane_json(params.extension_plane);
  write_json_file(info, cfg.output_dir / "sleeve.json");
}

void stage_mould(const PipelineConfig& cfg) {
  TriMesh finger_skin = read_mesh(cfg.output_dir / "finger_skin.stl", "register");
  TriMesh finger_bone = read_mesh(cfg.output_dir / "finger_bone.stl", "register");
  TriMesh core = read_mesh(cfg.output_dir / "sleeve_core.stl", "sleeve");
  TriMesh outer = read_mesh(cfg.output_dir / "sleeve_outer.stl", "sleeve");

  DesignParams params = cfg.design;
  params.extension_plane =
      resolve_plane(cfg.extension_plane, cfg.output_dir, "extension_plane", "extension");
  Vec3 axis = -params.extension_plane.normal;  // distal

  // clip the bone above the core so the insert and the core only meet at the
  // connector
  double core_top = -std::numeric_limits<double>::max();
  for (const auto& v : core.vertices) core_top = std::max(core_top, axis.dot(v));
  double cut_at = core_top + 2.0 * params.fit_clearance_mm;
  TriMesh bone = cut_with_plane(finger_bone, Plane(cut_at * axis, -axis), true);
  if (bone.empty()) throw Error(Err::EmptyMesh, "no bone volume above the sleeve core");

  Vec3 bone_centroid = Vec3::Zero();
  for (const auto& v : bone.vertices) bone_centroid += v;
  bone_centroid /= static_cast<double>(bone.vertices.size());
  double t_min = std::numeric_limits<double>::max(), t_max = -t_min;
  for (const auto& v : bone.vertices) {
    double t = axis.dot(v);
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  params.connector.axis_dir = axis;
  params.connector.axis_point = bone_centroid;

  // shrink the connector if the default does not fit inside the bone
  double bottom_radius = 0.0;
  for (const auto& v : bone.vertices) {
    if (axis.dot(v) > t_min + 2.0) continue;
    Vec3 d = v - bone_centroid;
    bottom_radius = std::max(bottom_radius, (d - axis.dot(d) * axis).norm());
  }
  double budget = bottom_radius - params.fit_clearance_mm - 0.4;
  if (budget <= 0.3) throw Error(Err::DegenerateGeometry, "bone too small for a connector");
  ConnectorSpec& con = params.connector;
  if (0.5 * con.diameter_mm + con.key_depth_mm > budget) {
    con.key_depth_mm = 0.35 * budget;
    con.diameter_mm = 1.1 * budget;
    con.key_width_mm = std::min(con.key_width_mm, 1.2 * 0.5 * con.diameter_mm);
  }
  con.depth_mm = std::min(con.depth_mm, 0.45 * (t_max - t_min));

  auto [bone_keyed, core_keyed] = design_connector(bone, core, params);

  TriMesh cavity = boolean_op(finger_skin, outer, BoolKind::Union, params.voxel_mm);
  std::vector<Vec3> fin_normals;
  auto fins = design_fins(cavity, {bone_keyed}, params, &fin_normals);
  TriMesh bone_insert = bone_keyed;
  for (const auto& fin : fins)
    bone_insert = boolean_op(bone_insert, fin, BoolKind::Union, params.voxel_mm);

  MouldAssembly assembly = split_mould(cavity, {bone_insert, core_keyed}, params);

  write_stl(assembly.mould_half_a, cfg.output_dir / "assembly_mould_half_a.stl");
  write_stl(assembly.mould_half_b, cfg.output_dir / "assembly_mould_half_b.stl");
  write_stl(assembly.sleeve_mould, cfg.output_dir / "assembly_sleeve_mould.stl");
  write_stl(assembly.bone_insert, cfg.output_dir / "assembly_bone_insert.stl");
  write_stl(assembly.finger_preview, cfg.output_dir / "assembly_finger_preview.stl");

  json info;
  json normals = json::array();
  for (const auto& n : fin_normals) normals.push_back({n.x(), n.y(), n.z()});
  info["fin_contact_normals"] = normals;
  info["connector_diameter_mm"] = con.diameter_mm;
  info["connector_depth_mm"] = con.depth_mm;
  info["connector_key_width_mm"] = con.key_width_mm;
  info["connector_key_depth_mm"] = con.key_depth_mm;
  info["connector_axis"] = {axis.x(), axis.y(), axis.z()};
  info["connector_axis_point_mm"] = {con.axis_point.x(), con.axis_point.y(),
                                     con.axis_point.z()};
  write_json_file(info, cfg.output_dir / "mould.json");
}

void stage_export(const PipelineConfig& cfg) {
  static const char* kParts[] = {"mould_half_a", "mould_half_b", "sleeve_mould", "bone_insert",
                                 "finger_preview"};
  MouldAssembly assembly;
  TriMesh* slots[] = {&assembly.mould_half_a, &assembly.mould_half_b, &assembly.sleeve_mould,
                      &assembly.bone_insert, &assembly.finger_preview};
  for (int i = 0; i < 5; ++i)
    *slots[i] = read_mesh(cfg.output_dir / (std::string("assembly_") + kParts[i] + ".stl"),
                          "mould");
  require_artifact(cfg.output_dir / "register.json", "register");
  require_artifact(cfg.output_dir / "sleeve.json", "sleeve");
  require_artifact(cfg.output_dir / "mould.json", "mould");
  json reg = read_json_file(cfg.output_dir / "register.json");
  json sleeve = read_json_file(cfg.output_dir / "sleeve.json");
  json mould = read_json_file(cfg.output_dir / "mould.json");

  json manifest;
  bool printable = true;
  json parts;
  for (int i = 0; i < 5; ++i) {
    ValidationReport rep = validate_mesh(*slots[i]);
    printable = printable && rep.printable();
    json p;
    p["triangles"] = slots[i]->triangles.size();
    p["closed"] = rep.closed;
    p["manifold"] = rep.manifold;
    p["consistent_winding"] = rep.consistent_winding;
    p["self_intersections"] = rep.self_intersections;
    p["min_feature_mm"] = rep.min_feature_mm;
    p["volume_mm3"] = rep.volume_mm3;
    p["area_mm2"] = rep.area_mm2;
    parts[kParts[i]] = p;
    write_stl(*slots[i], cfg.output_dir / (std::string(kParts[i]) + ".stl"));
  }
  manifest["parts"] = parts;

  double interference = max_pairwise_interference(assembly, cfg.design.voxel_mm);
  std::vector<Vec3> fin_normals;
  for (const auto& n : mould.at("fin_contact_normals"))
    fin_normals.push_back(vec3_from(n, "fin normal"));
  int rank = normal_rank(fin_normals);
  double pour = silicone_cavity_volume(assembly, cfg.design.voxel_mm);
  Vec3 axis = vec3_from(mould.at("connector_axis"), "connector axis");
  double travel = mould.at("connector_depth_mm").get<double>() + 2.0;
  bool separates = sleeve_mould_separates(assembly, axis, travel);

  double thickness = sleeve.at("thickness_mm").get<double>();
  double wall_median = sleeve.at("wall_median_mm").get<double>();
  double wall_min = sleeve.at("wall_min_mm").get<double>();
  double rms = reg.at("rms_mm").get<double>();

  manifest["registration"] = reg;
  manifest["sleeve_wall"] = sleeve;
  manifest["pour_volume_mm3"] = pour;
  manifest["max_interference_mm3"] = interference;
  manifest["fin_normal_rank"] = rank;
  manifest["sleeve_mould_separates"] = separates;

  json gates;
  gates["parts_printable"] = printable;
  gates["interference"] = interference <= tol::part_interference;
  gates["fin_rank"] = rank == 3;
  gates["wall_median"] = wall_median >= 0.9 * thickness && wall_median <= 1.1 * thickness;
  gates["wall_min"] = wall_min >= 0.5 * thickness;
  gates["registration_rms"] = rms <= 1.0;
  gates["reusability"] = separates;
  bool all = true;
  for (const auto& [key, value] : gates.items()) all = all && value.get<bool>();
  gates["all_passed"] = all;
  manifest["gates"] = gates;
  write_json_file(manifest, cfg.output_dir / "manifest.json");
}

}  // namespace

PipelineConfig load_config(const fs::path& file) {
  json j = read_json_file(file);
  try {
    reject_unknown_keys(j, {"input", "skin_iso_hu", "bone_iso_hu", "min_component_mm3",
                            "mirror_plane", "crop_plane", "extension_plane", "design", "icp",
                            "output_dir", "seed"},
                        "config");
    PipelineConfig cfg;
    if (!j.contains("input") || !j.at("input").is_object())
      throw Error(Err::InvalidArgument, "config needs an 'input' object");
    const json& in = j.at("input");
    reject_unknown_keys(in, {"dicom_dir", "raw_header", "phantom"}, "input");
    int sources = static_cast<int>(in.contains("dicom_dir")) +
                  static_cast<int>(in.contains("raw_header")) +
                  static_cast<int>(in.contains("phantom"));
    if (sources != 1)
      throw Error(Err::InvalidArgument, "config must name exactly one input source");
    if (in.contains("dicom_dir")) {
      cfg.input_kind = InputKind::Dicom;
      cfg.dicom_dir = in.at("dicom_dir").get<std::string>();
    } else if (in.contains("raw_header")) {
      cfg.input_kind = InputKind::Raw;
      cfg.raw_header = in.at("raw_header").get<std::string>();
    } else {
      cfg.input_kind = InputKind::Phantom;
      const json& ph = in.at("phantom");
      reject_unknown_keys(ph, {"seed", "spacing_mm", "dims", "truncation_fraction",
                               "truncated_finger", "noise_sigma_hu", "bone_radius_mm",
                               "pip_fraction", "extension_fraction"},
                          "input.phantom");
      PhantomSpec& p = cfg.phantom;
      if (ph.contains("seed")) p.seed = ph.at("seed").get<uint64_t>();
      if (ph.contains("spacing_mm")) p.spacing = ph.at("spacing_mm").get<double>();
      if (ph.contains("dims")) {
        Vec3 d = vec3_from(ph.at("dims"), "dims");
        p.dims = Vec3i(static_cast<int>(d.x()), static_cast<int>(d.y()),
                       static_cast<int>(d.z()));
      }
      if (ph.contains("truncation_fraction"))
        p.truncation_fraction = ph.at("truncation_fraction").get<double>();
      if (ph.contains("truncated_finger"))
        p.truncated_finger = ph.at("truncated_finger").get<int>();
      if (ph.contains("noise_sigma_hu")) p.noise_sigma = ph.at("noise_sigma_hu").get<double>();
      if (ph.contains("bone_radius_mm")) p.bone_radius = ph.at("bone_radius_mm").get<double>();
      if (ph.contains("pip_fraction")) p.pip_fraction = ph.at("pip_fraction").get<double>();
      if (ph.contains("extension_fraction"))
        p.extension_fraction = ph.at("extension_fraction").get<double>();
    }

    if (j.contains("skin_iso_hu")) cfg.skin_iso_hu = j.at("skin_iso_hu").get<double>();
    if (j.contains("bone_iso_hu")) cfg.bone_iso_hu = j.at("bone_iso_hu").get<double>();
    if (j.contains("min_component_mm3"))
      cfg.min_component_mm3 = j.at("min_component_mm3").get<double>();
    if (j.contains("mirror_plane")) cfg.mirror_plane = plane_from(j.at("mirror_plane"), "mirror");
    if (j.contains("crop_plane")) cfg.crop_plane = plane_from(j.at("crop_plane"), "crop");
    if (j.contains("extension_plane"))
      cfg.extension_plane = plane_from(j.at("extension_plane"), "extension");

    if (j.contains("design")) {
      const json& d = j.at("design");
      reject_unknown_keys(d, {"sleeve_thickness_mm", "fit_clearance_mm", "block_margin_mm",
                              "fin_count", "fin_width_mm", "fin_thickness_mm", "fin_length_mm",
                              "connector_diameter_mm", "connector_depth_mm",
                              "connector_key_width_mm", "connector_key_depth_mm", "split_plane",
                              "screw_hole_diameter_mm", "screw_positions_mm",
                              "sprue_diameter_mm", "voxel_mm"},
                          "design");
      DesignParams& p = cfg.design;
      if (d.contains("sleeve_thickness_mm"))
        p.sleeve_thickness_mm = d.at("sleeve_thickness_mm").get<double>();
      if (d.contains("fit_clearance_mm"))
        p.fit_clearance_mm = d.at("fit_clearance_mm").get<double>();
      if (d.contains("block_margin_mm")) p.block_margin_mm = d.at("block_margin_mm").get<double>();
      if (d.contains("fin_count")) p.fin_count = d.at("fin_count").get<int>();
      if (d.contains("fin_width_mm")) p.fin_width_mm = d.at("fin_width_mm").get<double>();
      if (d.contains("fin_thickness_mm"))
        p.fin_thickness_mm = d.at("fin_thickness_mm").get<double>();
      if (d.contains("fin_length_mm")) p.fin_length_mm = d.at("fin_length_mm").get<double>();
      if (d.contains("connector_diameter_mm"))
        p.connector.diameter_mm = d.at("connector_diameter_mm").get<double>();
      if (d.contains("connector_depth_mm"))
        p.connector.depth_mm = d.at("connector_depth_mm").get<double>();
      if (d.contains("connector_key_width_mm"))
        p.connector.key_width_mm = d.at("connector_key_width_mm").get<double>();
      if (d.contains("connector_key_depth_mm"))
        p.connector.key_depth_mm = d.at("connector_key_depth_mm").get<double>();
      if (d.contains("split_plane")) {
        p.split_plane = plane_from(d.at("split_plane"), "split");
        p.split_plane_auto = false;
      }
      if (d.contains("screw_hole_diameter_mm"))
        p.screws.hole_diameter_mm = d.at("screw_hole_diameter_mm").get<double>();
      if (d.contains("screw_positions_mm"))
        for (const auto& q : d.at("screw_positions_mm"))
          p.screws.positions.push_back(vec3_from(q, "screw position"));
      if (d.contains("sprue_diameter_mm"))
        p.sprue_diameter_mm = d.at("sprue_diameter_mm").get<double>();
      if (d.contains("voxel_mm")) p.voxel_mm = d.at("voxel_mm").get<double>();
    }

    if (j.contains("icp")) {
      const json& i = j.at("icp");
      reject_unknown_keys(i, {"max_iterations", "convergence_mm", "correspondence_cutoff_mm",
                              "sample_count"},
                          "icp");
      if (i.contains("max_iterations")) cfg.icp.max_iterations = i.at("max_iterations").get<int>();
      if (i.contains("convergence_mm"))
        cfg.icp.convergence_mm = i.at("convergence_mm").get<double>();
      if (i.contains("correspondence_cutoff_mm"))
        cfg.icp.correspondence_cutoff_mm = i.at("correspondence_cutoff_mm").get<double>();
      if (i.contains("sample_count")) cfg.icp.sample_count = i.at("sample_count").get<int>();
    }

    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) cfg.phantom.seed = j.at("seed").get<uint64_t>();

    cfg.design.validate();
    if (cfg.input_kind == InputKind::Phantom) cfg.phantom.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Err::InvalidArgument, std::string("bad config: ") + e.what());
  }
}

void run_stage(const PipelineConfig& config, std::string_view stage) {
  ensure_writable(config.output_dir);
  if (stage == "phantom") {
    if (config.input_kind != InputKind::Phantom)
      throw Error(Err::InvalidArgument, "phantom stage needs a phantom input config");
    stage_phantom(config);
  } else if (stage == "ingest") {
    stage_ingest(config);
  } else if (stage == "mesh") {
    stage_mesh(config);
  } else if (stage == "mirror") {
    stage_mirror(config);
  } else if (stage == "register") {
    stage_register(config);
  } else if (stage == "sleeve") {
    stage_sleeve(config);
  } else if (stage == "mould") {
    stage_mould(config);
  } else if (stage == "export") {
    stage_export(config);
  } else {
    throw Error(Err::InvalidArgument, "unknown stage '" + std::string(stage) + "'");
  }
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  ensure_writable(config.output_dir);
  if (config.input_kind == InputKind::Phantom) run_stage(config, "phantom");
  for (const char* stage : {"ingest", "mesh", "mirror", "register", "sleeve", "mould", "export"})
    run_stage(config, stage);
  PipelineResult res;
  res.manifest_path = config.output_dir / "manifest.json";
  json manifest = read_json_file(res.manifest_path);
  res.gates_passed = manifest.at("gates").at("all_passed").get<bool>();
  return res;
}

}  // namespace df
