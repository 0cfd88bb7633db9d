#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "digitforge/dicom.hpp"
#include "digitforge/volume.hpp"
#include "test_support.hpp"

using namespace df;
using namespace testsupport;

namespace {

VoxelVolume tiny_volume(const Vec3i& dims, double spacing = 1.0) {
  VoxelVolume v;
  v.dims = dims;
  v.spacing = Vec3::Constant(spacing);
  v.samples.assign(static_cast<size_t>(dims.x()) * dims.y() * dims.z(), 0.0f);
  return v;
}

}  // namespace

TEST_CASE("raw volume round trip is bit exact") {
  auto dir = fresh_dir("raw");
  VoxelVolume v = tiny_volume(Vec3i(16, 16, 16), 0.7);
  v.origin = Vec3(1.5, -2.0, 3.25);
  std::mt19937_64 rng(11);
  for (auto& s : v.samples)
    s = static_cast<float>(static_cast<int64_t>(rng() % 4096) - 1024);
  save_raw_volume(v, dir / "vol.rvolh");
  VoxelVolume r = load_raw_volume(dir / "vol.rvolh");
  CHECK(r.dims == v.dims);
  CHECK(r.spacing == v.spacing);
  CHECK(r.origin == v.origin);
  REQUIRE(r.samples.size() == v.samples.size());
  for (size_t i = 0; i < v.samples.size(); ++i) REQUIRE(r.samples[i] == v.samples[i]);

  save_raw_volume(r, dir / "again.rvolh");
  CHECK(read_bytes(dir / "vol.rvol") == read_bytes(dir / "again.rvol"));
}

TEST_CASE("raw volume of zeros and single sample payload") {
  auto dir = fresh_dir("rawz");
  VoxelVolume v = tiny_volume(Vec3i(2, 2, 2));
  save_raw_volume(v, dir / "z.rvolh");
  VoxelVolume r = load_raw_volume(dir / "z.rvolh");
  for (float s : r.samples) CHECK(s == 0.0f);

  VoxelVolume one = tiny_volume(Vec3i(1, 1, 1));
  save_raw_volume(one, dir / "one.rvolh");
  CHECK(read_bytes(dir / "one.rvol").size() == sizeof(float));
}

TEST_CASE("raw volume payload size mismatch") {
  auto dir = fresh_dir("rawbad");
  VoxelVolume v = tiny_volume(Vec3i(4, 4, 4));
  save_raw_volume(v, dir / "v.rvolh");
  std::ofstream trunc(dir / "v.rvol", std::ios::binary | std::ios::trunc);
  std::vector<float> short_payload(63, 0.0f);
  trunc.write(reinterpret_cast<const char*>(short_payload.data()), 63 * sizeof(float));
  trunc.close();
  CHECK_THROWS_AS(load_raw_volume(dir / "v.rvolh"), Error);
  try {
    load_raw_volume(dir / "v.rvolh");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::SizeMismatch);
  }
}

TEST_CASE("raw header rejects unknown keys and missing fields") {
  auto dir = fresh_dir("rawhdr");
  {
    std::ofstream h(dir / "bad.rvolh");
    h << "dims 2 2 2\nwhatever 1\n";
  }
  CHECK_THROWS_AS(load_raw_volume(dir / "bad.rvolh"), Error);
  {
    std::ofstream h(dir / "missing.rvolh");
    h << "dims 2 2 2\nspacing_mm 1 1 1\n";
  }
  try {
    load_raw_volume(dir / "missing.rvolh");
    FAIL("expected MalformedHeader");
  } catch (const Error& e) {
    CHECK(e.kind() == Err::MalformedHeader);
  }
}

TEST_CASE("dicom series reconstructs spacing from slice positions") {
  auto dir = fresh_dir("dicom");
  for (int k = 0; k < 3; ++k) {
    SliceParams sp;
    sp.position = Vec3(0, 0, 2.0 * k);
    write_dicom_slice(dir / ("s" + std::to_string(k) + ".dcm"), sp);
  }
  VoxelVolume v = load_dicom_series(dir);
  CHECK(v.dims == Vec3i(8, 8, 3));
  CHECK(v.spacing.z() == doctest::Approx(2.0));
  CHECK(v.spacing.x() == doctest::Approx(0.5));
}

TEST_CASE("dicom slices sorted by position, not file name") {
  auto dir = fresh_dir("dicomsort");
  for (int k = 0; k < 3; ++k) {
    SliceParams sp;
    sp.position = Vec3(0, 0, 2.0 * (2 - k));  // file a holds the top slice
    sp.pixels.assign(64, static_cast<int16_t>(100 * (2 - k)));
    write_dicom_slice(dir / (std::string(1, static_cast<char>('a' + k)) + ".dcm"), sp);
  }
  VoxelVolume v = load_dicom_series(dir);
  CHECK(v.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(v.at(0, 0, 2) == doctest::Approx(200.0));
  CHECK(v.origin.z() == doctest::Approx(0.0));
}

TEST_CASE("dicom rescale maps raw to HU") {
  auto dir = fresh_dir("dicomhu");
  for (int k = 0; k < 2; ++k) {
    SliceParams sp;
    sp.position = Vec3(0, 0, 2.0 * k);
    sp.slope = 1.0;
    sp.intercept = -1024.0;
    sp.pixels.assign(64, 1024);
    write_dicom_slice(dir / ("s" + std::to_string(k) + ".dcm"), sp);
  }
  VoxelVolume v = load_dicom_series(dir);
  CHECK(v.at(3, 3, 0) == doctest::Approx(0.0));
}

TEST_CASE("dicom error cases") {
  {
    auto dir = fresh_dir("dicom1");
    write_dicom_slice(dir / "only.dcm", SliceParams{});
    try {
      load_dicom_series(dir);
      FAIL("expected InsufficientSlices");
    } catch (const Error& e) {
      CHECK(e.kind() == Err::InsufficientSlices);
    }
  }
  {
    auto dir = fresh_dir("dicom2");
    SliceParams a, b;
    b.position = Vec3(0, 0, 2);
    b.series_uid = "9.9.9";
    write_dicom_slice(dir / "a.dcm", a);
    write_dicom_slice(dir / "b.dcm", b);
    try {
      load_dicom_series(dir);
      FAIL("expected MixedSeries");
    } catch (const Error& e) {
      CHECK(e.kind() == Err::MixedSeries);
    }
  }
  {
    auto dir = fresh_dir("dicom3");
    for (int k = 0; k < 3; ++k) {
      SliceParams sp;
      sp.position = Vec3(0, 0, k == 2 ? 5.0 : 2.0 * k);  // gap 3 after gap 2
      write_dicom_slice(dir / ("s" + std::to_string(k) + ".dcm"), sp);
    }
    try {
      load_dicom_series(dir);
      FAIL("expected NonUniformSpacing");
    } catch (const Error& e) {
      CHECK(e.kind() == Err::NonUniformSpacing);
    }
  }
  {
    auto dir = fresh_dir("dicom4");
    SliceParams sp;
    sp.transfer_syntax = "1.2.840.10008.1.2.2";  // big endian
    write_dicom_slice(dir / "a.dcm", sp);
    try {
      parse_dicom_slice(dir / "a.dcm");
      FAIL("expected UnsupportedEncoding");
    } catch (const Error& e) {
      CHECK(e.kind() == Err::UnsupportedEncoding);
    }
  }
}
