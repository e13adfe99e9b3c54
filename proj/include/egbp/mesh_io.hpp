#ifndef EGBP_MESH_IO_HPP
#define EGBP_MESH_IO_HPP

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "egbp/mesh.hpp"

namespace egbp {

/// Shortest-safe decimal form of a double: 17 significant digits round-trip exactly.
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// Parses a decimal double, rejecting trailing garbage.
inline double parse_double(const std::string& text) {
  // strtod rather than stod: subnormal values set ERANGE but are valid.
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(begin, &end);
  if (text.empty() || std::isspace(static_cast<unsigned char>(text.front())) || end != begin + text.size() ||
      (errno == ERANGE && std::isinf(value))) {
    throw std::invalid_argument("cannot parse number '" + text + "'");
  }
  return value;
}

// Plain-text format:
//   V E T
//   x y boundary_flag      (V lines)
//   i0 i1 i2               (T lines, 0-based)
// E is the facet count and is checked on reading.

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_facets() << ' ' << mesh.num_elements() << '\n';
  for (int i = 0; i < static_cast<int>(mesh.num_vertices()); ++i) {
    const Point& p = mesh.vertex(i);
    out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << (mesh.is_boundary_vertex(i) ? 1 : 0) << '\n';
  }
  for (const auto& tri : mesh.triangles()) out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
}

inline Mesh read_mesh(std::istream& in) {
  std::size_t nv = 0, ne = 0, nt = 0;
  if (!(in >> nv >> ne >> nt)) throw std::invalid_argument("read_mesh: malformed header");
  std::vector<Point> vertices(nv);
  std::vector<bool> flags(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    std::string xs, ys;
    int flag = 0;
    if (!(in >> xs >> ys >> flag)) throw std::invalid_argument("read_mesh: truncated vertex list");
    vertices[i] = {parse_double(xs), parse_double(ys)};
    flags[i] = flag != 0;
  }
  std::vector<std::array<int, 3>> triangles(nt);
  for (auto& tri : triangles) {
    if (!(in >> tri[0] >> tri[1] >> tri[2])) throw std::invalid_argument("read_mesh: truncated triangle list");
  }
  Mesh mesh(std::move(vertices), std::move(triangles), std::move(flags));
  if (mesh.num_facets() != ne) {
    throw std::invalid_argument("read_mesh: header declares " + std::to_string(ne) + " facets, mesh has " +
                                std::to_string(mesh.num_facets()));
  }
  return mesh;
}

inline Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path);
  return read_mesh(in);
}

inline void write_mesh_file(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file " + path);
  write_mesh(out, mesh);
}

}  // namespace egbp

#endif  // EGBP_MESH_IO_HPP
