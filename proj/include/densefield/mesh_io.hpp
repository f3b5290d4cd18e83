#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

namespace io_detail {

inline std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected a number, got '" + tok + "'");
  }
}

inline long long parse_int(const std::string& tok, const std::string& where) {
  long long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(where + ": expected an integer, got '" + tok + "'");
  }
  return v;
}

/// Appends a polygon as a triangle fan rooted at its first corner.
inline void push_fan(std::vector<Face>& faces, const std::vector<std::int32_t>& poly,
                     const std::string& where) {
  if (poly.size() < 3) throw ParseError(where + ": face with fewer than 3 vertices");
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) faces.push_back({poly[0], poly[i], poly[i + 1]});
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace io_detail

inline TriangleMesh parse_obj(std::istream& in, const std::string& name = "<obj>") {
  TriangleMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<long long>> raw_faces;
  std::vector<std::size_t> raw_lines;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto tok = io_detail::split_ws(line);
    if (tok.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError(where + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(io_detail::parse_double(tok[1], where),
                                 io_detail::parse_double(tok[2], where),
                                 io_detail::parse_double(tok[3], where));
    } else if (tok[0] == "f") {
      std::vector<long long> idx;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const std::string first = tok[i].substr(0, tok[i].find('/'));
        idx.push_back(io_detail::parse_int(first, where));
      }
      raw_faces.push_back(std::move(idx));
      raw_lines.push_back(lineno);
    }
    // vn, vt, g, o, s, usemtl, mtllib: ignored
  }
  const auto nv = static_cast<long long>(mesh.vertices.size());
  for (std::size_t f = 0; f < raw_faces.size(); ++f) {
    const std::string where = name + ":" + std::to_string(raw_lines[f]);
    std::vector<std::int32_t> poly;
    for (long long i : raw_faces[f]) {
      if (i == 0) throw ParseError(where + ": OBJ indices are 1-based, found 0");
      long long zero_based = i > 0 ? i - 1 : nv + i;
      if (zero_based < 0 || zero_based >= nv) {
        throw TopologyError(where + ": vertex index " + std::to_string(i) + " out of range");
      }
      poly.push_back(static_cast<std::int32_t>(zero_based));
    }
    io_detail::push_fan(mesh.faces, poly, where);
  }
  validate(mesh);
  return mesh;
}

inline TriangleMesh parse_ply(std::istream& in, const std::string& name = "<ply>") {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;  // "list" for list properties
  };
  std::string line;
  if (!std::getline(in, line) || io_detail::split_ws(line) != std::vector<std::string>{"ply"}) {
    throw ParseError(name + ": missing 'ply' magic");
  }
  std::vector<Element> elements;
  bool ascii = false;
  for (;;) {
    if (!std::getline(in, line)) throw ParseError(name + ": unterminated header");
    auto tok = io_detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        throw ParseError(name + ": only ASCII PLY is supported");
      }
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(name + ": malformed element line");
      elements.push_back({tok[1], static_cast<std::size_t>(io_detail::parse_int(tok[2], name)), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(name + ": property before element");
      if (tok.size() >= 2 && tok[1] == "list") {
        if (tok.size() != 5) throw ParseError(name + ": malformed list property");
        elements.back().properties.push_back("list:" + tok[4]);
      } else {
        if (tok.size() != 3) throw ParseError(name + ": malformed property");
        elements.back().properties.push_back(tok[2]);
      }
    } else if (tok[0] == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError(name + ": missing format line");

  TriangleMesh mesh;
  bool have_normals = false;
  for (const auto& el : elements) {
    auto find = [&](const std::string& p) -> int {
      for (std::size_t i = 0; i < el.properties.size(); ++i)
        if (el.properties[i] == p) return static_cast<int>(i);
      return -1;
    };
    if (el.name == "vertex") {
      int ix = find("x"), iy = find("y"), iz = find("z");
      int inx = find("nx"), iny = find("ny"), inz = find("nz");
      if (ix < 0 || iy < 0 || iz < 0) throw ParseError(name + ": vertex lacks x/y/z");
      have_normals = inx >= 0 && iny >= 0 && inz >= 0;
      for (std::size_t r = 0; r < el.count; ++r) {
        if (!std::getline(in, line)) throw ParseError(name + ": truncated vertex list");
        auto tok = io_detail::split_ws(line);
        if (tok.size() < el.properties.size()) throw ParseError(name + ": short vertex row");
        auto at = [&](int i) { return io_detail::parse_double(tok[i], name); };
        mesh.vertices.emplace_back(at(ix), at(iy), at(iz));
        if (have_normals) mesh.normals.emplace_back(at(inx), at(iny), at(inz));
      }
    } else if (el.name == "face") {
      if (el.properties.empty() || el.properties[0].rfind("list:", 0) != 0) {
        throw ParseError(name + ": face element needs a leading vertex index list");
      }
      const auto nv = static_cast<long long>(mesh.vertices.size());
      for (std::size_t r = 0; r < el.count; ++r) {
        if (!std::getline(in, line)) throw ParseError(name + ": truncated face list");
        auto tok = io_detail::split_ws(line);
        if (tok.empty()) throw ParseError(name + ": empty face row");
        const auto n = io_detail::parse_int(tok[0], name);
        if (n < 0 || static_cast<std::size_t>(n) + 1 > tok.size()) {
          throw ParseError(name + ": face row shorter than its declared count");
        }
        std::vector<std::int32_t> poly;
        for (long long i = 1; i <= n; ++i) {
          auto idx = io_detail::parse_int(tok[i], name);
          if (idx < 0 || idx >= nv) {
            throw TopologyError(name + ": face index " + std::to_string(idx) + " out of range");
          }
          poly.push_back(static_cast<std::int32_t>(idx));
        }
        io_detail::push_fan(mesh.faces, poly, name + ": face " + std::to_string(r));
      }
    } else {
      for (std::size_t r = 0; r < el.count; ++r) {
        if (!std::getline(in, line)) throw ParseError(name + ": truncated element " + el.name);
      }
    }
  }
  validate(mesh);
  return mesh;
}

/// Reads an ASCII OBJ or PLY mesh; the format is chosen by extension.
inline TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open " + path.string());
  const auto ext = io_detail::lowercase(path.extension().string());
  if (ext == ".obj") return parse_obj(in, path.string());
  if (ext == ".ply") return parse_ply(in, path.string());
  throw ParseError(path.string() + ": unsupported mesh extension '" + ext + "'");
}

inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  for (const auto& v : mesh.vertices) {
    out << "v " << io_detail::format_double(v.x()) << ' ' << io_detail::format_double(v.y())
        << ' ' << io_detail::format_double(v.z()) << '\n';
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

inline void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  write_obj(out, mesh);
  if (!out) throw IOError("write failed: " + path.string());
}

// Point cloud CSV: header `x,y,z,nx,ny,nz`, one row per point.

inline void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  out << "x,y,z,nx,ny,nz\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3& n = cloud.normals[i];
    out << io_detail::format_double(p.x()) << ',' << io_detail::format_double(p.y()) << ','
        << io_detail::format_double(p.z()) << ',' << io_detail::format_double(n.x()) << ','
        << io_detail::format_double(n.y()) << ',' << io_detail::format_double(n.z()) << '\n';
  }
}

inline void save_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  write_cloud_csv(out, cloud);
}

/// Parsed CSV table: header names plus numeric rows. Lines starting with '#'
/// are metadata and are returned separately.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(std::istream& in, const std::string& name = "<csv>") {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(s);
    while (std::getline(is, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " columns, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(io_detail::parse_double(c, name + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(name + ": missing header");
  return t;
}

inline CsvTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

/// Loads a cloud CSV. The frame tag is not stored in the file; callers pass it.
inline PointCloud load_cloud_csv(const std::filesystem::path& path, Frame frame = Frame::normalized) {
  auto t = load_csv(path);
  const std::vector<std::string> expected{"x", "y", "z", "nx", "ny", "nz"};
  if (t.header != expected) throw ParseError(path.string() + ": header must be x,y,z,nx,ny,nz");
  PointCloud c;
  c.frame = frame;
  for (const auto& r : t.rows) {
    c.points.emplace_back(r[0], r[1], r[2]);
    Vec3 n(r[3], r[4], r[5]);
    const double len = n.norm();
    if (!(len > 0.0)) throw ParseError(path.string() + ": zero normal in cloud");
    c.normals.push_back(n / len);
  }
  if (c.empty()) throw ParseError(path.string() + ": cloud has no points");
  return c;
}

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Blue (0) to red (1) linear ramp through purple; 0.5 maps to (128, 0, 128).
/// Values outside [0, 1] are clamped; NaN maps to the blue end.
inline Rgb field_color(double value) {
  double t = std::isnan(value) ? 0.0 : std::clamp(value, 0.0, 1.0);
  auto channel = [](double x) { return static_cast<std::uint8_t>(std::lround(255.0 * x)); };
  return {channel(t), 0, channel(1.0 - t)};
}

inline void write_colored_ply(std::ostream& out, const PointCloud& cloud,
                              std::span<const double> values) {
  if (values.size() != cloud.size()) {
    throw ShapeMismatch("field has " + std::to_string(values.size()) + " values but cloud has " +
                        std::to_string(cloud.size()) + " points");
  }
  out << "ply\nformat ascii 1.0\ncomment point-wise field, blue=0 red=1\n"
      << "element vertex " << cloud.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3& n = cloud.normals[i];
    const Rgb c = field_color(values[i]);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g %d %d %d\n", p.x(), p.y(), p.z(),
                  n.x(), n.y(), n.z(), c.r, c.g, c.b);
    out << buf;
  }
}

}  // namespace densefield
