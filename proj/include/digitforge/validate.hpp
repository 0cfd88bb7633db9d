#pragma once

#include "digitforge/trimesh.hpp"

namespace df {

struct ValidationReport {
  bool closed = false;
  bool manifold = false;
  bool consistent_winding = false;
  long self_intersections = 0;
  double min_feature_mm = 0.0;  // inward ray estimate of the thinnest wall
  int degenerate_triangles = 0;
  double volume_mm3 = 0.0;  // only meaningful when closed
  double area_mm2 = 0.0;

  bool printable(double feature_floor = tol::min_feature_floor) const {
    return closed && manifold && consistent_winding && self_intersections == 0 &&
           min_feature_mm >= feature_floor;
  }
};

ValidationReport validate_mesh(const TriMesh& mesh);

struct WallStats {
  double median_mm = 0.0;
  double min_mm = 0.0;
  double max_mm = 0.0;
  size_t samples = 0;
};

// Wall thickness by casting rays inward from triangle centroids and taking the
// first near-perpendicular exit.
WallStats sample_wall_thickness(const TriMesh& solid, int max_samples = 2000);

}  // namespace df
