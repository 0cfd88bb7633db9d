#include "digitforge/stl_io.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace df {

namespace {
constexpr char kHeaderText[] = "digitforge binary STL";

void put_f32(std::string& buf, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.append(b, 4);
}
}  // namespace

void write_stl(const TriMesh& mesh, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(84 + 50 * mesh.triangles.size());
  char header[80] = {0};
  std::memcpy(header, kHeaderText, sizeof(kHeaderText) - 1);
  buf.append(header, 80);
  uint32_t count = static_cast<uint32_t>(mesh.triangles.size());
  char cb[4];
  std::memcpy(cb, &count, 4);
  buf.append(cb, 4);
  for (const auto& t : mesh.triangles) {
    // normals derive from the emitted float coordinates so that a float
    // round trip reproduces the file byte for byte
    Vec3 a = mesh.vertices[t[0]].cast<float>().cast<double>();
    Vec3 b = mesh.vertices[t[1]].cast<float>().cast<double>();
    Vec3 c = mesh.vertices[t[2]].cast<float>().cast<double>();
    Vec3 n = (b - a).cross(c - a);
    double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    for (int i = 0; i < 3; ++i) put_f32(buf, static_cast<float>(n[i]));
    for (const Vec3* v : {&a, &b, &c})
      for (int i = 0; i < 3; ++i) put_f32(buf, static_cast<float>((*v)[i]));
    buf.append("\0\0", 2);  // attribute byte count
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Err::IoFailure, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.close();
  if (!out) throw Error(Err::IoFailure, "write failed on " + path.string());
}

TriMesh read_stl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::IoFailure, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 84) throw Error(Err::Truncated, "file shorter than the 84-byte prefix");
  uint32_t count;
  std::memcpy(&count, data.data() + 80, 4);
  size_t expected = 84 + 50ull * count;
  if (data.size() != expected) {
    if (data.rfind("solid", 0) == 0)
      throw Error(Err::AsciiUnsupported, "ASCII STL is not supported");
    throw Error(Err::Truncated, "file is " + std::to_string(data.size()) + " bytes, expected " +
                                    std::to_string(expected));
  }

  TriMesh mesh;
  std::map<std::array<float, 3>, int> weld;  // exact byte equality
  mesh.triangles.reserve(count);
  const char* p = data.data() + 84;
  for (uint32_t i = 0; i < count; ++i) {
    p += 12;  // stored normal ignored, winding is authoritative
    std::array<int, 3> tri{};
    for (int v = 0; v < 3; ++v) {
      std::array<float, 3> key{};
      std::memcpy(key.data(), p, 12);
      p += 12;
      auto [it, inserted] = weld.try_emplace(key, static_cast<int>(mesh.vertices.size()));
      if (inserted) mesh.vertices.emplace_back(key[0], key[1], key[2]);
      tri[v] = it->second;
    }
    p += 2;
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

}  // namespace df
