#pragma once

#include <vector>

#include "digitforge/trimesh.hpp"

namespace df {

struct IcpParams {
  int max_iterations = 50;
  double convergence_mm = 1e-9;        // stop when the RMS change drops below this
  double correspondence_cutoff_mm = 5.0;
  int sample_count = 5000;
};

struct IcpResult {
  RigidTransform transform;
  double rms_mm = 0.0;
  int iterations = 0;
  size_t inliers = 0;
  std::vector<double> rms_history;  // one entry per iteration, non-increasing
};

// Mirror plane between a shape and its reflected counterpart: normal along the
// coordinate axis of largest centroid separation, point at the midpoint.
Plane estimate_mirror_plane(const TriMesh& left, const TriMesh& right);

// Deterministic area-weighted surface sampling.
std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, uint64_t seed);

// Coarse initialization: centroid shift plus principal-axes alignment with the
// sign ambiguity resolved by a one-shot correspondence cost.
RigidTransform initial_alignment(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

// Point-to-point ICP with closest-point correspondences and the cross-
// covariance (Kabsch) update. Pairs beyond the cutoff are excluded; the RMS is
// computed over inliers and is non-increasing across iterations.
IcpResult icp_rigid(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                    const RigidTransform& init, const IcpParams& params);

}  // namespace df
