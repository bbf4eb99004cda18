#include "touchrecon/geometry/mesh_io.hpp"

#include "touchrecon/common/binary_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace touchrecon {
namespace {

std::string lower_extension(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

void finish_load(TriangleMesh& mesh, const std::string& path) {
  mesh.validate();
  remove_degenerate_faces(mesh);
  if (mesh.faces.empty()) throw InputError(path + ": mesh has no faces");
  mesh.compute_normals();
}

long parse_obj_index(std::string_view token, std::size_t vertex_count, const std::string& path) {
  const auto slash = token.find('/');
  if (slash != std::string_view::npos) token = token.substr(0, slash);
  long idx = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), idx);
  if (ec != std::errc{} || idx == 0) throw InputError(path + ": bad face index '" + std::string(token) + "'");
  return idx > 0 ? idx - 1 : static_cast<long>(vertex_count) + idx;
}

// PLY scalar types by name.
struct PlyType {
  int size = 0;
  bool is_float = false;
  bool is_signed = false;
};

PlyType ply_type(const std::string& name, const std::string& path) {
  if (name == "char" || name == "int8") return {1, false, true};
  if (name == "uchar" || name == "uint8") return {1, false, false};
  if (name == "short" || name == "int16") return {2, false, true};
  if (name == "ushort" || name == "uint16") return {2, false, false};
  if (name == "int" || name == "int32") return {4, false, true};
  if (name == "uint" || name == "uint32") return {4, false, false};
  if (name == "float" || name == "float32") return {4, true, true};
  if (name == "double" || name == "float64") return {8, true, true};
  throw InputError(path + ": unsupported PLY type " + name);
}

double read_binary_scalar(ByteReader& r, const PlyType& t) {
  if (t.is_float) return t.size == 4 ? static_cast<double>(r.f32()) : r.f64();
  std::uint64_t v = 0;
  for (int i = 0; i < t.size; ++i) v |= static_cast<std::uint64_t>(r.u8()) << (8 * i);
  if (t.is_signed && t.size < 8 && (v >> (8 * t.size - 1)) & 1u) v |= ~std::uint64_t{0} << (8 * t.size);
  return t.is_signed ? static_cast<double>(static_cast<std::int64_t>(v)) : static_cast<double>(v);
}

struct PlyProperty {
  std::string name;
  PlyType type;
  bool is_list = false;
  PlyType count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
};

PlyData parse_ply(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto next_line = [&]() {
    const auto start = pos;
    while (pos < bytes.size() && bytes[pos] != std::byte{'\n'}) ++pos;
    std::string line(reinterpret_cast<const char*>(bytes.data()) + start, pos - start);
    if (pos < bytes.size()) ++pos;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "ply") throw InputError(path + ": not a PLY file");
  std::string format;
  std::vector<PlyElement> elements;
  for (;;) {
    if (pos >= bytes.size()) throw InputError(path + ": PLY header not terminated");
    std::istringstream ls(next_line());
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      ls >> format;
    } else if (kw == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw InputError(path + ": property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = ply_type(ct, path);
        p.type = ply_type(it, path);
      } else {
        ls >> p.name;
        p.type = ply_type(t, path);
      }
      elements.back().properties.push_back(p);
    } else if (kw == "end_header") {
      break;
    }
  }
  const bool binary = format == "binary_little_endian";
  if (!binary && format != "ascii") throw InputError(path + ": unsupported PLY format '" + format + "'");

  PlyData out;
  ByteReader reader(std::span<const std::byte>(bytes).subspan(pos));
  std::istringstream text;
  if (!binary) text.str(std::string(reinterpret_cast<const char*>(bytes.data()) + pos, bytes.size() - pos));
  auto scalar = [&](const PlyType& t) {
    if (binary) return read_binary_scalar(reader, t);
    double v;
    if (!(text >> v)) throw InputError(path + ": truncated PLY body");
    return v;
  };
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      Vec3 p = Vec3::Zero();
      for (const auto& prop : e.properties) {
        if (prop.is_list) {
          const auto n = static_cast<std::size_t>(scalar(prop.count_type));
          std::vector<std::uint32_t> idx(n);
          for (auto& v : idx) v = static_cast<std::uint32_t>(scalar(prop.type));
          if (e.name == "face" && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
            for (std::size_t k = 2; k < n; ++k) out.faces.push_back({idx[0], idx[k - 1], idx[k]});
        } else {
          const double v = scalar(prop.type);
          if (e.name == "vertex") {
            if (prop.name == "x") p.x() = v;
            if (prop.name == "y") p.y() = v;
            if (prop.name == "z") p.z() = v;
          }
        }
      }
      if (e.name == "vertex") out.vertices.push_back(p);
    }
  }
  return out;
}

}  // namespace

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  TriangleMesh mesh;
  std::string line;
  std::vector<long> poly;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw InputError(path + ": bad vertex line");
      mesh.vertices.push_back(p);
    } else if (kw == "f") {
      poly.clear();
      std::string tok;
      while (ls >> tok) poly.push_back(parse_obj_index(tok, mesh.vertices.size(), path));
      if (poly.size() < 3) throw InputError(path + ": face with fewer than 3 vertices");
      for (long idx : poly)
        if (idx < 0) throw InputError(path + ": face index out of range");
      for (std::size_t k = 2; k < poly.size(); ++k)
        mesh.faces.push_back({static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[k - 1]),
                              static_cast<std::uint32_t>(poly[k])});
    }
  }
  finish_load(mesh, path);
  return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw Error("write failed: " + path);
}

TriangleMesh read_ply(const std::string& path) {
  auto data = parse_ply(path);
  TriangleMesh mesh;
  mesh.vertices = std::move(data.vertices);
  mesh.faces = std::move(data.faces);
  finish_load(mesh, path);
  return mesh;
}

void write_ply(const std::string& path, const TriangleMesh& mesh) {
  ByteWriter w;
  w.raw("ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(mesh.vertices.size()) +
        "\nproperty double x\nproperty double y\nproperty double z\nelement face " +
        std::to_string(mesh.faces.size()) + "\nproperty list uchar uint vertex_indices\nend_header\n");
  for (const auto& v : mesh.vertices) {
    w.f64(v.x());
    w.f64(v.y());
    w.f64(v.z());
  }
  for (const auto& f : mesh.faces) {
    w.u8(3);
    for (auto i : f) w.u32(i);
  }
  write_file_bytes(path, w.buffer());
}

void write_point_cloud(const std::string& path, const std::vector<Vec3>& points) {
  ByteWriter w;
  w.raw("ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(points.size()) +
        "\nproperty double x\nproperty double y\nproperty double z\nend_header\n");
  for (const auto& v : points) {
    w.f64(v.x());
    w.f64(v.y());
    w.f64(v.z());
  }
  write_file_bytes(path, w.buffer());
}

std::vector<Vec3> read_point_cloud(const std::string& path) { return parse_ply(path).vertices; }

TriangleMesh load_mesh(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InputError("no such file: " + path);
  const auto ext = lower_extension(path);
  if (ext == ".obj") return read_obj(path);
  if (ext == ".ply") return read_ply(path);
  throw InputError(path + ": unsupported mesh format (expected .obj or .ply)");
}

void save_mesh(const std::string& path, const TriangleMesh& mesh) {
  const auto ext = lower_extension(path);
  if (ext == ".ply")
    write_ply(path, mesh);
  else
    write_obj(path, mesh);
}

}  // namespace touchrecon
