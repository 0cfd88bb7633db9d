#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace df {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Mat3 = Eigen::Matrix3d;

enum class Err {
  // volume ingest
  MixedSeries,
  NonUniformSpacing,
  UnsupportedEncoding,
  InsufficientSlices,
  SizeMismatch,
  MalformedHeader,
  DegenerateVolume,
  // mesh kernel
  NonClosedInput,
  RobustnessFailure,
  // registration
  EmptyMesh,
  DegenerateGeometry,
  // design
  BoneOutsideSkin,
  ThicknessViolation,
  AxisMiss,
  RankDeficient,
  SplitMiss,
  // stl
  Truncated,
  AsciiUnsupported,
  // cli / pipeline
  MissingUpstreamArtifact,
  IoFailure,
  InvalidArgument,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err kind, const std::string& msg)
      : std::runtime_error(std::string(err_name(kind)) + ": " + msg), kind_(kind) {}
  Err kind() const { return kind_; }

 private:
  Err kind_;
};

// Centralized tolerances so tests and operations stay in agreement.
namespace tol {
inline constexpr double min_triangle_area = 1e-9;   // mm^2, dropped on construction
inline constexpr double orthonormal = 1e-9;         // rotation matrix check
inline constexpr double slice_spacing_rel = 0.01;   // inter-slice uniformity
inline constexpr double iso_nudge = 1e-6;           // HU, tie break at exact iso
inline constexpr double min_feature_floor = 0.1;    // mm, printer accuracy
inline constexpr double part_interference = 1.0;    // mm^3, assembled parts
inline constexpr double mirror_involution = 1e-12;  // mm
inline constexpr double volume_rel = 1e-6;          // generic relative volume checks
}  // namespace tol

namespace defaults {
inline constexpr double skin_iso_hu = -300.0;
inline constexpr double bone_iso_hu = 250.0;
inline constexpr double min_component_mm3 = 10.0;
inline constexpr double boolean_voxel_mm = 0.4;
inline constexpr double sleeve_thickness_mm = 1.5;
inline constexpr double fit_clearance_mm = 0.15;
inline constexpr double block_margin_mm = 8.0;
}  // namespace defaults

}  // namespace df
