#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "promptevo/error.hpp"
#include "promptevo/geometry.hpp"

namespace promptevo::geometry {
namespace {

// OBJ face tokens look like "7", "7/2", "7//3" or "7/2/3"; negative indices
// are relative to the current vertex count.
std::uint32_t parse_face_index(const std::string& token, std::size_t vertex_count, int line_no) {
  const std::string head = token.substr(0, token.find('/'));
  long long idx = 0;
  const auto res = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (res.ec != std::errc{} || res.ptr != head.data() + head.size() || idx == 0) {
    throw Error(ErrorCode::parse_error, "bad face index '" + token + "' on line " + std::to_string(line_no));
  }
  if (idx < 0) idx += static_cast<long long>(vertex_count) + 1;
  if (idx < 1 || static_cast<std::size_t>(idx) > vertex_count) {
    throw Error(ErrorCode::parse_error, "face index out of range on line " + std::to_string(line_no));
  }
  return static_cast<std::uint32_t>(idx - 1);
}

}  // namespace

TriMesh read_obj(std::istream& in) {
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v{};
      if (!(ls >> v[0] >> v[1] >> v[2])) {
        throw Error(ErrorCode::parse_error, "bad vertex on line " + std::to_string(line_no));
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(parse_face_index(tok, mesh.vertices.size(), line_no));
      if (poly.size() < 3) {
        throw Error(ErrorCode::parse_error, "face with fewer than 3 vertices on line " + std::to_string(line_no));
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  return mesh;
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open OBJ file " + path.string());
  return read_obj(in);
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write OBJ file " + path.string());
  write_obj(out, mesh);
}

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open XYZ file " + path.string());
  PointCloud cloud;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    Vec3 p{};
    if (ls >> p[0] >> p[1] >> p[2]) cloud.points.push_back(p);
  }
  return cloud;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write XYZ file " + path.string());
  out << std::setprecision(17);
  for (const auto& p : cloud.points) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
}

}  // namespace promptevo::geometry
