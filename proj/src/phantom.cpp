#include "digitforge/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "digitforge/primitives.hpp"
#include "digitforge/sdf.hpp"

namespace df {

void PhantomSpec::validate() const {
  if (!(spacing > 0.0)) throw Error(Err::InvalidArgument, "spacing must be positive");
  if ((dims.array() < 16).any())
    throw Error(Err::InvalidArgument, "phantom grid must be at least 16 voxels per axis");
  if (!(truncation_fraction > 0.0 && truncation_fraction < 1.0))
    throw Error(Err::InvalidArgument, "truncation fraction must lie in (0, 1)");
  if (!(pip_fraction > 0.0 && pip_fraction < 1.0) ||
      !(extension_fraction > 0.0 && extension_fraction < pip_fraction))
    throw Error(Err::InvalidArgument, "crop fractions must satisfy 0 < extension < pip < 1");
  if (truncated_finger < 0 || truncated_finger >= 4)
    throw Error(Err::InvalidArgument, "truncated finger index out of range");
  for (double r : finger_radii)
    if (!(r > 0.0 && r > bone_radius))
      throw Error(Err::InvalidArgument, "finger radii must exceed the bone radius");
  for (double l : finger_lengths)
    if (!(l > 0.0)) throw Error(Err::InvalidArgument, "finger lengths must be positive");
  if (!(bone_radius > 0.0)) throw Error(Err::InvalidArgument, "bone radius must be positive");
  if (!(hu_air < skin_iso && skin_iso < hu_soft && hu_soft < bone_iso && bone_iso < hu_bone))
    throw Error(Err::InvalidArgument,
                "HU levels must bracket the iso values: air < skin iso < soft < bone iso < bone");
  if (!(ramp_width_factor > 0.0))
    throw Error(Err::InvalidArgument, "ramp width must be positive");
  if (noise_sigma < 0.0) throw Error(Err::InvalidArgument, "noise sigma must be non-negative");
}

namespace {

struct Capsule {
  Vec3 a, b;
  double r;
};

// One hand in the right-side layout (positive x). The left hand is obtained by
// evaluating this at the reflected point, which keeps the two hands bitwise
// mirror images of each other.
struct HandModel {
  Vec3 palm_center;
  Vec3 palm_half;
  double palm_round;
  std::vector<Capsule> skin;
  std::vector<Capsule> bone;

  double skin_sdf(const Vec3& p) const {
    double d = sdf_rounded_box(p, palm_center, palm_half, palm_round);
    for (const auto& c : skin) d = std::min(d, sdf_capsule(p, c.a, c.b, c.r));
    return d;
  }
  double bone_sdf(const Vec3& p) const {
    double d = std::numeric_limits<double>::max();
    for (const auto& c : bone) d = std::min(d, sdf_capsule(p, c.a, c.b, c.r));
    return d;
  }
};

HandModel build_hand(const PhantomSpec& s, bool truncated) {
  HandModel h;
  h.palm_center = Vec3(s.palm_center_x, 0.0, s.palm_center_z);
  h.palm_half = s.palm_half;
  h.palm_round = s.palm_round;
  for (int f = 0; f < 4; ++f) {
    double len = s.finger_lengths[f];
    if (truncated && f == s.truncated_finger) len *= s.truncation_fraction;
    Vec3 base(s.palm_center_x + s.finger_offsets[f], 0.0, s.finger_base_z);
    h.skin.push_back({base, base + Vec3(0, 0, len), s.finger_radii[f]});
    double bone_len = std::max(2.0, len - s.finger_radii[f]);
    h.bone.push_back({base - Vec3(0, 0, 4.0), base + Vec3(0, 0, bone_len), s.bone_radius});
  }
  return h;
}

}  // namespace

PhantomResult generate_phantom(const PhantomSpec& spec) {
  spec.validate();

  HandModel intact = build_hand(spec, false);
  HandModel residual = build_hand(spec, true);

  PhantomResult out;
  VoxelVolume& vol = out.volume;
  vol.dims = spec.dims;
  vol.spacing = Vec3::Constant(spec.spacing);
  Vec3 half_idx(0.5 * (spec.dims.x() - 1), 0.5 * (spec.dims.y() - 1), 0.5 * (spec.dims.z() - 1));
  vol.origin = -spec.spacing * half_idx;
  vol.samples.resize(static_cast<size_t>(spec.dims.x()) * spec.dims.y() * spec.dims.z());

  double w = spec.ramp_width_factor * spec.spacing;
  auto ramp = [w](double d) { return std::clamp(0.5 - d / w, 0.0, 1.0); };

  size_t idx = 0;
  for (int k = 0; k < spec.dims.z(); ++k) {
    double z = (k - half_idx.z()) * spec.spacing;
    for (int j = 0; j < spec.dims.y(); ++j) {
      double y = (j - half_idx.y()) * spec.spacing;
      for (int i = 0; i < spec.dims.x(); ++i, ++idx) {
        double x = (i - half_idx.x()) * spec.spacing;
        Vec3 p(x, y, z), q(-x, y, z);
        double skin = std::min(intact.skin_sdf(p), residual.skin_sdf(q));
        double bone = std::min(intact.bone_sdf(p), residual.bone_sdf(q));
        double hu = spec.hu_air + (spec.hu_soft - spec.hu_air) * ramp(skin) +
                    (spec.hu_bone - spec.hu_soft) * ramp(bone);
        vol.samples[idx] = static_cast<float>(hu);
      }
    }
  }

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma);
    for (auto& s : vol.samples) s = static_cast<float>(s + gauss(rng));
  }

  int f = spec.truncated_finger;
  double len = spec.finger_lengths[f];
  double x_left = -(spec.palm_center_x + spec.finger_offsets[f]);
  Vec3 base(x_left, 0.0, spec.finger_base_z);
  double z_pip = spec.finger_base_z + spec.pip_fraction * len;
  double z_ext = spec.finger_base_z + spec.extension_fraction * len;

  PhantomTruth& t = out.truth;
  t.mirror_plane = Plane(Vec3::Zero(), Vec3::UnitX());
  // both planes keep the distal side under the cut convention (d <= 0 kept)
  t.crop_plane = Plane(Vec3(x_left, 0.0, z_pip), -Vec3::UnitZ());
  t.extension_plane = Plane(Vec3(x_left, 0.0, z_ext), -Vec3::UnitZ());
  t.finger_landmark = Vec3(x_left, 0.0, z_pip);
  t.true_finger_skin = make_capsule(base, base + Vec3(0, 0, len), spec.finger_radii[f]);
  double bone_len = std::max(2.0, len - spec.finger_radii[f]);
  t.true_finger_bone =
      make_capsule(base - Vec3(0, 0, 4.0), base + Vec3(0, 0, bone_len), spec.bone_radius);
  return out;
}

}  // namespace df
