#include "digitforge/volume.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace df {

void VoxelVolume::validate() const {
  if ((dims.array() < 1).any())
    throw Error(Err::InvalidArgument, "volume dims must be >= 1");
  if (!(spacing.array() > 0.0).all())
    throw Error(Err::InvalidArgument, "volume spacing must be positive");
  Mat3 err = orientation.transpose() * orientation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-6)
    throw Error(Err::InvalidArgument, "orientation columns must be orthonormal");
  size_t n = static_cast<size_t>(dims.x()) * dims.y() * dims.z();
  if (samples.size() != n)
    throw Error(Err::SizeMismatch, "sample count does not match dims");
  for (float s : samples)
    if (!std::isfinite(s)) throw Error(Err::InvalidArgument, "non-finite sample");
}

// Header format: one key per line.
//   dims 128 128 128
//   spacing_mm 1 1 1
//   origin_mm 0 0 0
//   orientation 1 0 0 0 1 0 0 0 1      (optional, row-major)
//   dtype float32|int16
//   data_file volume.rvol               (relative to the header)
VoxelVolume load_raw_volume(const std::filesystem::path& header) {
  std::ifstream in(header);
  if (!in) throw Error(Err::IoFailure, "cannot open " + header.string());
  VoxelVolume v;
  std::string dtype, data_file;
  bool have_dims = false, have_spacing = false, have_dtype = false, have_data = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") {
      ls >> v.dims.x() >> v.dims.y() >> v.dims.z();
      have_dims = !ls.fail();
    } else if (key == "spacing_mm") {
      ls >> v.spacing.x() >> v.spacing.y() >> v.spacing.z();
      have_spacing = !ls.fail();
    } else if (key == "origin_mm") {
      ls >> v.origin.x() >> v.origin.y() >> v.origin.z();
    } else if (key == "orientation") {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) ls >> v.orientation(r, c);
    } else if (key == "dtype") {
      ls >> dtype;
      have_dtype = !ls.fail();
    } else if (key == "data_file") {
      ls >> data_file;
      have_data = !ls.fail();
    } else {
      throw Error(Err::MalformedHeader, "unknown key '" + key + "'");
    }
    if (ls.fail()) throw Error(Err::MalformedHeader, "cannot parse line '" + line + "'");
  }
  if (!have_dims || !have_spacing || !have_dtype || !have_data)
    throw Error(Err::MalformedHeader, "missing required key");
  if (dtype != "float32" && dtype != "int16")
    throw Error(Err::MalformedHeader, "unsupported dtype " + dtype);
  if ((v.dims.array() < 1).any())
    throw Error(Err::MalformedHeader, "dims must be >= 1");

  std::filesystem::path payload = header.parent_path() / data_file;
  std::ifstream bin(payload, std::ios::binary);
  if (!bin) throw Error(Err::IoFailure, "cannot open " + payload.string());
  bin.seekg(0, std::ios::end);
  size_t bytes = static_cast<size_t>(bin.tellg());
  bin.seekg(0);
  size_t n = static_cast<size_t>(v.dims.x()) * v.dims.y() * v.dims.z();
  size_t sample_size = dtype == "float32" ? 4 : 2;
  if (bytes != n * sample_size)
    throw Error(Err::SizeMismatch, "payload is " + std::to_string(bytes) + " bytes, expected " +
                                       std::to_string(n * sample_size));
  v.samples.resize(n);
  if (dtype == "float32") {
    bin.read(reinterpret_cast<char*>(v.samples.data()), static_cast<std::streamsize>(bytes));
  } else {
    std::vector<int16_t> raw(n);
    bin.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    for (size_t i = 0; i < n; ++i) v.samples[i] = static_cast<float>(raw[i]);
  }
  if (!bin) throw Error(Err::IoFailure, "short read on " + payload.string());
  v.validate();
  return v;
}

void save_raw_volume(const VoxelVolume& volume, const std::filesystem::path& header) {
  volume.validate();
  std::filesystem::path payload = header;
  payload.replace_extension(".rvol");

  std::ostringstream head;
  head.precision(17);
  head << "dims " << volume.dims.x() << " " << volume.dims.y() << " " << volume.dims.z() << "\n";
  head << "spacing_mm " << volume.spacing.x() << " " << volume.spacing.y() << " "
       << volume.spacing.z() << "\n";
  head << "origin_mm " << volume.origin.x() << " " << volume.origin.y() << " "
       << volume.origin.z() << "\n";
  head << "orientation";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) head << " " << volume.orientation(r, c);
  head << "\n";
  head << "dtype float32\n";
  head << "data_file " << payload.filename().string() << "\n";

  std::ofstream out(header, std::ios::trunc);
  if (!out) throw Error(Err::IoFailure, "cannot write " + header.string());
  out << head.str();
  out.close();
  if (!out) throw Error(Err::IoFailure, "write failed on " + header.string());

  std::ofstream bin(payload, std::ios::binary | std::ios::trunc);
  if (!bin) throw Error(Err::IoFailure, "cannot write " + payload.string());
  bin.write(reinterpret_cast<const char*>(volume.samples.data()),
            static_cast<std::streamsize>(volume.samples.size() * sizeof(float)));
  bin.close();
  if (!bin) throw Error(Err::IoFailure, "write failed on " + payload.string());
}

}  // namespace df
