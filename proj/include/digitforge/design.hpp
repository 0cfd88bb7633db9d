#pragma once

#include <utility>
#include <vector>

#include "digitforge/registration.hpp"
#include "digitforge/trimesh.hpp"
#include "digitforge/validate.hpp"

namespace df {

struct ConnectorSpec {
  double diameter_mm = 4.0;
  double depth_mm = 5.0;
  double key_width_mm = 2.0;
  double key_depth_mm = 1.5;
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();  // distal direction, male boss points this way
};

struct ScrewSpec {
  double hole_diameter_mm = 3.4;  // M3 clearance
  std::vector<Vec3> positions;    // on the split plane; empty selects 4 corners
};

struct DesignParams {
  double sleeve_thickness_mm = defaults::sleeve_thickness_mm;
  Plane extension_plane;  // cut keeps the side with d <= 0 (distal)
  int fin_count = 3;
  double fin_width_mm = 2.0;
  double fin_thickness_mm = 1.0;
  double fin_length_mm = 0.0;     // 0 = auto, from the insert past the cavity wall
  std::vector<Vec3> fin_normals;  // explicit contact normals; empty = auto layout
  ConnectorSpec connector;
  double fit_clearance_mm = defaults::fit_clearance_mm;
  double block_margin_mm = defaults::block_margin_mm;
  Plane split_plane;
  bool split_plane_auto = true;
  ScrewSpec screws;
  double sprue_diameter_mm = 4.0;  // 0 disables the pour channel
  double voxel_mm = defaults::boolean_voxel_mm;

  void validate() const;
};

// The five printable solids. `finger_preview` is the cast silicone part: the
// posed finger plus sleeve cuff minus the inserts, i.e. the pour volume.
struct MouldAssembly {
  TriMesh mould_half_a;
  TriMesh mould_half_b;
  TriMesh sleeve_mould;  // core forming the sleeve's inner surface
  TriMesh bone_insert;
  TriMesh finger_preview;
};

struct FingerModel {
  TriMesh skin;
  TriMesh bone;
  RigidTransform pose;
};

// Mirror the contralateral skin and bone, register the mirrored skin onto the
// stump side, then crop both at the crop plane and keep the component at the
// crop plane's anchor point.
FingerModel build_finger_model(const TriMesh& contra_skin, const TriMesh& contra_bone,
                               const Plane& mirror, const Plane& crop, const TriMesh& stump_skin,
                               const IcpParams& icp);

struct SleeveResult {
  TriMesh solid;   // the printable-check silicone cuff shell
  TriMesh mould;   // the core: clearance-dilated stump, cropped at the extension plane
  TriMesh outer;   // core offset outward by the wall thickness
};

SleeveResult design_sleeve(const TriMesh& stump_skin, const TriMesh& finger_skin,
                           const DesignParams& params);

// Wall thickness measured from the outer surface to the inner (mould) surface,
// excluding the trim face and rim at the extension plane.
WallStats sleeve_wall_stats(const SleeveResult& sleeve, const Plane& extension,
                            int max_samples = 2000);

// Returns (bone with female keyed socket, sleeve mould with male keyed boss).
std::pair<TriMesh, TriMesh> design_connector(const TriMesh& bone, const TriMesh& sleeve_mould,
                                             const DesignParams& params);

std::vector<TriMesh> design_fins(const TriMesh& cavity, const std::vector<TriMesh>& embedded,
                                 const DesignParams& params,
                                 std::vector<Vec3>* contact_normals = nullptr);

// `cavity` is the full outer shape of the cast; inserts[0] is the bone insert
// (fins included), inserts[1] the sleeve mould core.
MouldAssembly split_mould(const TriMesh& cavity, const std::vector<TriMesh>& inserts,
                          const DesignParams& params);

double silicone_cavity_volume(const MouldAssembly& assembly,
                              double voxel = defaults::boolean_voxel_mm);

int normal_rank(const std::vector<Vec3>& normals, double tolerance = 1e-6);

// Plane through the two dominant principal axes of the cavity.
Plane default_split_plane(const TriMesh& cavity);

// Largest pairwise boolean intersection volume between distinct parts.
double max_pairwise_interference(const MouldAssembly& assembly,
                                 double voxel = defaults::boolean_voxel_mm);

// Swept-interference check: the sleeve mould pulled off along -axis must stay
// clear of the bone insert at every station.
bool sleeve_mould_separates(const MouldAssembly& assembly, const Vec3& axis, double travel,
                            int stations = 5, double voxel = defaults::boolean_voxel_mm);

}  // namespace df
