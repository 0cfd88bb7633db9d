#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "digitforge/common.hpp"
#include "digitforge/sdf.hpp"
#include "digitforge/trimesh.hpp"

namespace testsupport {

using df::Vec3;

inline std::filesystem::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  std::filesystem::path dir = std::filesystem::temp_directory_path() /
                              ("digitforge_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- minimal explicit-VR little-endian DICOM slice writer -------------------

struct SliceParams {
  std::string series_uid = "1.2.3.4";
  Vec3 position = Vec3::Zero();
  double spacing_row = 0.5;
  double spacing_col = 0.5;
  int rows = 8;
  int columns = 8;
  double slope = 1.0;
  double intercept = 0.0;
  std::vector<int16_t> pixels;  // row-major, rows*columns; zero-filled if empty
  std::string transfer_syntax = "1.2.840.10008.1.2.1";
};

inline void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

inline void put_element(std::vector<uint8_t>& b, uint16_t group, uint16_t elem, const char* vr,
                        const std::vector<uint8_t>& value) {
  put_u16(b, group);
  put_u16(b, elem);
  b.push_back(vr[0]);
  b.push_back(vr[1]);
  bool long_form = std::strcmp(vr, "OB") == 0 || std::strcmp(vr, "OW") == 0;
  if (long_form) {
    put_u16(b, 0);
    uint32_t len = static_cast<uint32_t>(value.size());
    for (int i = 0; i < 4; ++i) b.push_back((len >> (8 * i)) & 0xff);
  } else {
    put_u16(b, static_cast<uint16_t>(value.size()));
  }
  b.insert(b.end(), value.begin(), value.end());
}

inline std::vector<uint8_t> str_value(std::string s) {
  if (s.size() % 2) s.push_back(' ');
  return {s.begin(), s.end()};
}

inline std::vector<uint8_t> us_value(uint16_t v) {
  std::vector<uint8_t> b;
  put_u16(b, v);
  return b;
}

inline void write_dicom_slice(const std::filesystem::path& path, const SliceParams& sp) {
  std::vector<uint8_t> b(128, 0);
  b.insert(b.end(), {'D', 'I', 'C', 'M'});
  auto ds = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  put_element(b, 0x0002, 0x0010, "UI", str_value(sp.transfer_syntax));
  put_element(b, 0x0020, 0x000e, "UI", str_value(sp.series_uid));
  put_element(b, 0x0020, 0x0032, "DS",
              str_value(ds(sp.position.x()) + "\\" + ds(sp.position.y()) + "\\" +
                        ds(sp.position.z())));
  put_element(b, 0x0020, 0x0037, "DS", str_value("1\\0\\0\\0\\1\\0"));
  put_element(b, 0x0028, 0x0010, "US", us_value(static_cast<uint16_t>(sp.rows)));
  put_element(b, 0x0028, 0x0011, "US", us_value(static_cast<uint16_t>(sp.columns)));
  put_element(b, 0x0028, 0x0030, "DS", str_value(ds(sp.spacing_row) + "\\" + ds(sp.spacing_col)));
  put_element(b, 0x0028, 0x0100, "US", us_value(16));
  put_element(b, 0x0028, 0x0103, "US", us_value(1));
  put_element(b, 0x0028, 0x1052, "DS", str_value(ds(sp.intercept)));
  put_element(b, 0x0028, 0x1053, "DS", str_value(ds(sp.slope)));
  std::vector<int16_t> px = sp.pixels;
  px.resize(static_cast<size_t>(sp.rows) * sp.columns, 0);
  std::vector<uint8_t> pv(px.size() * 2);
  std::memcpy(pv.data(), px.data(), pv.size());
  put_element(b, 0x7fe0, 0x0010, "OW", pv);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// --- oracles ----------------------------------------------------------------

struct OracleBox {
  Vec3 min, max;
  bool contains(const Vec3& p) const {
    return (p.array() > min.array()).all() && (p.array() < max.array()).all();
  }
  double volume() const { return (max - min).prod(); }
};

// Volume by counting 0.25 mm cells whose center satisfies the predicate. Box
// faces snapped to the 0.25 grid never coincide with cell centers, so the
// count is exact for boxes and their unions/intersections.
template <typename Pred>
double voxel_count_volume(const df::Aabb& bounds, const Pred& inside, double step = 0.25) {
  Vec3 lo = bounds.min - Vec3::Constant(2.0 * step);
  Vec3 hi = bounds.max + Vec3::Constant(2.0 * step);
  int nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / step));
  int ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / step));
  int nz = static_cast<int>(std::ceil((hi.z() - lo.z()) / step));
  long count = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (inside(Vec3(lo + step * Vec3(i + 0.5, j + 0.5, k + 0.5)))) ++count;
  return static_cast<double>(count) * step * step * step;
}

// RMS of point-to-surface distances from samples of `mesh` to `reference`.
inline double rms_surface_distance(const std::vector<Vec3>& samples, const df::TriMesh& reference) {
  df::MeshSdf sdf(reference);
  double se = 0.0;
  for (const auto& p : samples) {
    double d = sdf.signed_distance(p);
    se += d * d;
  }
  return std::sqrt(se / static_cast<double>(samples.size()));
}

inline double angle_deg(const df::Mat3& a, const df::Mat3& b) {
  double c = 0.5 * ((a.transpose() * b).trace() - 1.0);
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / 3.14159265358979323846;
}

}  // namespace testsupport
