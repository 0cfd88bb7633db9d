#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "digitforge/volume.hpp"

namespace df {

// One parsed slice file of the supported subset (uncompressed explicit-VR
// little endian).
struct SliceRecord {
  std::string series_uid;
  Vec3 position = Vec3::Zero();        // mm
  Vec3 row_dir = Vec3::UnitX();        // direction of increasing column index
  Vec3 col_dir = Vec3::UnitY();        // direction of increasing row index
  double spacing_row = 0.0;            // mm between rows (y step)
  double spacing_col = 0.0;            // mm between columns (x step)
  int rows = 0;
  int columns = 0;
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;
  std::vector<int32_t> raw_pixels;     // row-major
};

SliceRecord parse_dicom_slice(const std::filesystem::path& file);

// Assembles every slice file in the directory into one volume. Slices are
// ordered by the projection of their position onto the slice normal; the HU
// mapping is slope*raw + intercept.
VoxelVolume load_dicom_series(const std::filesystem::path& directory);

}  // namespace df
