#pragma once

#include <filesystem>
#include <vector>

#include "digitforge/common.hpp"

namespace df {

// Regular scalar grid in Hounsfield units, x-fastest sample order.
struct VoxelVolume {
  Vec3i dims = Vec3i::Zero();
  Vec3 spacing = Vec3::Ones();     // mm per axis
  Vec3 origin = Vec3::Zero();      // world position of sample (0,0,0)
  Mat3 orientation = Mat3::Identity();  // direction cosines, columns = axes
  std::vector<float> samples;

  size_t index(int i, int j, int k) const {
    return static_cast<size_t>(i) +
           static_cast<size_t>(dims.x()) * (static_cast<size_t>(j) +
                                            static_cast<size_t>(dims.y()) * static_cast<size_t>(k));
  }
  float at(int i, int j, int k) const { return samples[index(i, j, k)]; }
  Vec3 world(double i, double j, double k) const {
    return origin + orientation * Vec3(spacing.x() * i, spacing.y() * j, spacing.z() * k);
  }
  void validate() const;  // throws on broken invariants
};

VoxelVolume load_raw_volume(const std::filesystem::path& header);
void save_raw_volume(const VoxelVolume& volume, const std::filesystem::path& header);

}  // namespace df
