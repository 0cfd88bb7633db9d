#pragma once

#include <array>
#include <cstdint>

#include "digitforge/trimesh.hpp"
#include "digitforge/volume.hpp"

namespace df {

// Synthetic CT fixture: two capsule-based hands mirrored about x = 0, with one
// finger of the left hand truncated to a stump.
struct PhantomSpec {
  uint64_t seed = 0;
  double spacing = 1.0;            // mm, isotropic
  Vec3i dims = Vec3i(128, 128, 128);

  double palm_center_x = 32.0;     // right palm; the left palm mirrors it
  Vec3 palm_half = Vec3(27.0, 7.0, 16.0);
  double palm_center_z = -28.0;
  double palm_round = 4.0;

  std::array<double, 4> finger_lengths = {38.0, 46.0, 42.0, 34.0};
  std::array<double, 4> finger_radii = {4.2, 4.5, 4.3, 4.0};
  std::array<double, 4> finger_offsets = {-19.5, -6.5, 6.5, 19.5};  // x from palm center
  double finger_base_z = -14.0;
  double bone_radius = 3.0;

  int truncated_finger = 2;        // "ring finger"
  double truncation_fraction = 0.45;  // stump length as fraction of finger length
  double pip_fraction = 0.45;         // crop landmark along the finger
  double extension_fraction = 0.08;   // sleeve extension plane along the finger

  double hu_air = -1000.0;
  double hu_soft = 40.0;
  double hu_bone = 700.0;
  double skin_iso = defaults::skin_iso_hu;
  double bone_iso = defaults::bone_iso_hu;
  double ramp_width_factor = 1.5;  // HU ramp width in voxels
  double noise_sigma = 0.0;        // optional additive gaussian HU noise

  void validate() const;
};

struct PhantomTruth {
  Plane mirror_plane;       // x = 0
  Plane crop_plane;         // PIP level of the truncated finger, left side
  Plane extension_plane;    // sleeve extension level, left side
  Vec3 finger_landmark;     // on the truncated finger axis at the crop plane
  TriMesh true_finger_skin;  // analytic capsule of the missing finger (full length)
  TriMesh true_finger_bone;
};

struct PhantomResult {
  VoxelVolume volume;
  PhantomTruth truth;
};

PhantomResult generate_phantom(const PhantomSpec& spec);

}  // namespace df
