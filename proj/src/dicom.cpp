#include "digitforge/dicom.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace df {

namespace {

constexpr const char* kExplicitLittleEndian = "1.2.840.10008.1.2.1";

struct Cursor {
  const uint8_t* p;
  size_t len;
  size_t off = 0;

  bool done() const { return off >= len; }
  void need(size_t n, const char* what) const {
    if (off + n > len) throw Error(Err::MalformedHeader, std::string("truncated ") + what);
  }
  uint16_t u16() {
    need(2, "element");
    uint16_t v;
    std::memcpy(&v, p + off, 2);
    off += 2;
    return v;
  }
  uint32_t u32() {
    need(4, "element");
    uint32_t v;
    std::memcpy(&v, p + off, 4);
    off += 4;
    return v;
  }
};

bool long_form_vr(const char vr[2]) {
  auto is = [&](const char* s) { return vr[0] == s[0] && vr[1] == s[1]; };
  return is("OB") || is("OW") || is("OF") || is("SQ") || is("UT") || is("UN");
}

std::string trim_uid(std::string s) {
  while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
  return s;
}

std::vector<double> parse_ds(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, '\\')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

SliceRecord parse_dicom_slice(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Err::IoFailure, "cannot open " + file.string());
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 132 || std::memcmp(data.data() + 128, "DICM", 4) != 0)
    throw Error(Err::UnsupportedEncoding, file.filename().string() + " lacks the DICM preamble");

  Cursor cur{data.data(), data.size(), 132};
  SliceRecord rec;
  int bits_allocated = 16;
  int pixel_representation = 1;
  std::vector<uint8_t> pixel_data;
  bool have_pos = false, have_orient = false, have_spacing = false, have_pixels = false;

  while (!cur.done()) {
    uint16_t group = cur.u16();
    uint16_t elem = cur.u16();
    cur.need(2, "VR");
    char vr[2] = {static_cast<char>(cur.p[cur.off]), static_cast<char>(cur.p[cur.off + 1])};
    if (vr[0] < 'A' || vr[0] > 'Z' || vr[1] < 'A' || vr[1] > 'Z')
      throw Error(Err::UnsupportedEncoding, "implicit VR is not supported");
    cur.off += 2;
    uint32_t length;
    if (long_form_vr(vr)) {
      cur.u16();  // reserved
      length = cur.u32();
    } else {
      length = cur.u16();
    }
    if (length == 0xffffffffu)
      throw Error(Err::UnsupportedEncoding, "undefined element lengths are not supported");
    cur.need(length, "value");
    const uint8_t* val = cur.p + cur.off;
    cur.off += length;

    auto as_string = [&] { return std::string(reinterpret_cast<const char*>(val), length); };
    auto as_u16 = [&]() -> uint16_t {
      if (length != 2) throw Error(Err::MalformedHeader, "bad US length");
      uint16_t v;
      std::memcpy(&v, val, 2);
      return v;
    };

    uint32_t tag = (static_cast<uint32_t>(group) << 16) | elem;
    switch (tag) {
      case 0x00020010: {
        std::string ts = trim_uid(as_string());
        if (ts != kExplicitLittleEndian)
          throw Error(Err::UnsupportedEncoding, "transfer syntax " + ts);
        break;
      }
      case 0x0020000e: rec.series_uid = trim_uid(as_string()); break;
      case 0x00200032: {
        auto v = parse_ds(as_string());
        if (v.size() != 3) throw Error(Err::MalformedHeader, "image position needs 3 values");
        rec.position = Vec3(v[0], v[1], v[2]);
        have_pos = true;
        break;
      }
      case 0x00200037: {
        auto v = parse_ds(as_string());
        if (v.size() != 6) throw Error(Err::MalformedHeader, "image orientation needs 6 values");
        rec.row_dir = Vec3(v[0], v[1], v[2]).normalized();
        rec.col_dir = Vec3(v[3], v[4], v[5]).normalized();
        have_orient = true;
        break;
      }
      case 0x00280010: rec.rows = as_u16(); break;
      case 0x00280011: rec.columns = as_u16(); break;
      case 0x00280030: {
        auto v = parse_ds(as_string());
        if (v.size() != 2) throw Error(Err::MalformedHeader, "pixel spacing needs 2 values");
        rec.spacing_row = v[0];
        rec.spacing_col = v[1];
        have_spacing = true;
        break;
      }
      case 0x00280100: bits_allocated = as_u16(); break;
      case 0x00280103: pixel_representation = as_u16(); break;
      case 0x00281052: rec.rescale_intercept = parse_ds(as_string()).at(0); break;
      case 0x00281053: rec.rescale_slope = parse_ds(as_string()).at(0); break;
      case 0x7fe00010:
        pixel_data.assign(val, val + length);
        have_pixels = true;
        break;
      default: break;  // unneeded tags are skipped
    }
  }

  if (rec.rows <= 0 || rec.columns <= 0 || !have_pos || !have_orient || !have_spacing ||
      !have_pixels)
    throw Error(Err::MalformedHeader, file.filename().string() + " misses a required tag");
  if (!(rec.spacing_row > 0.0 && rec.spacing_col > 0.0))
    throw Error(Err::MalformedHeader, "pixel spacing must be positive");
  if (bits_allocated != 16)
    throw Error(Err::UnsupportedEncoding, "only 16-bit pixel data is supported");
  size_t n = static_cast<size_t>(rec.rows) * rec.columns;
  if (pixel_data.size() != n * 2)
    throw Error(Err::SizeMismatch, "pixel data does not match rows*columns");

  rec.raw_pixels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    if (pixel_representation == 1) {
      int16_t v;
      std::memcpy(&v, pixel_data.data() + 2 * i, 2);
      rec.raw_pixels[i] = v;
    } else {
      uint16_t v;
      std::memcpy(&v, pixel_data.data() + 2 * i, 2);
      rec.raw_pixels[i] = v;
    }
  }
  return rec;
}

VoxelVolume load_dicom_series(const std::filesystem::path& directory) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(directory))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<SliceRecord> slices;
  slices.reserve(files.size());
  for (const auto& f : files) slices.push_back(parse_dicom_slice(f));
  if (slices.size() < 2)
    throw Error(Err::InsufficientSlices, "found " + std::to_string(slices.size()) + " slice(s)");

  const SliceRecord& first = slices.front();
  for (const auto& s : slices) {
    if (s.series_uid != first.series_uid)
      throw Error(Err::MixedSeries, "multiple series identifiers in directory");
    if (s.rows != first.rows || s.columns != first.columns ||
        s.spacing_row != first.spacing_row || s.spacing_col != first.spacing_col)
      throw Error(Err::MixedSeries, "slice geometry differs within the series");
  }

  Vec3 normal = first.row_dir.cross(first.col_dir).normalized();
  std::sort(slices.begin(), slices.end(), [&](const SliceRecord& a, const SliceRecord& b) {
    return normal.dot(a.position) < normal.dot(b.position);
  });

  std::vector<double> gaps;
  for (size_t i = 1; i < slices.size(); ++i)
    gaps.push_back(normal.dot(slices[i].position) - normal.dot(slices[i - 1].position));
  std::vector<double> sorted_gaps = gaps;
  std::sort(sorted_gaps.begin(), sorted_gaps.end());
  double median = sorted_gaps[sorted_gaps.size() / 2];
  if (!(median > 0.0))
    throw Error(Err::NonUniformSpacing, "coincident slice positions");
  for (double g : gaps)
    if (std::abs(g - median) > tol::slice_spacing_rel * median)
      throw Error(Err::NonUniformSpacing,
                  "slice gap " + std::to_string(g) + " vs median " + std::to_string(median));

  VoxelVolume vol;
  vol.dims = Vec3i(first.columns, first.rows, static_cast<int>(slices.size()));
  vol.spacing = Vec3(first.spacing_col, first.spacing_row, median);
  vol.origin = slices.front().position;
  vol.orientation.col(0) = first.row_dir;
  vol.orientation.col(1) = first.col_dir;
  vol.orientation.col(2) = normal;
  vol.samples.resize(static_cast<size_t>(vol.dims.x()) * vol.dims.y() * vol.dims.z());
  for (size_t k = 0; k < slices.size(); ++k) {
    const SliceRecord& s = slices[k];
    for (int j = 0; j < s.rows; ++j)
      for (int i = 0; i < s.columns; ++i) {
        double raw = s.raw_pixels[static_cast<size_t>(j) * s.columns + i];
        vol.samples[vol.index(i, j, static_cast<int>(k))] =
            static_cast<float>(s.rescale_slope * raw + s.rescale_intercept);
      }
  }
  vol.validate();
  return vol;
}

}  // namespace df
