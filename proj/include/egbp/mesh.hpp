#ifndef EGBP_MESH_HPP
#define EGBP_MESH_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "egbp/geometry.hpp"

namespace egbp {

/// An edge of the triangulation.
///
/// Every facet has an owner ("left") element; the stored normal is the unit
/// outward normal of that element. Interior facets also record the neighbour
/// ("right") element, boundary facets store -1 there. Jumps and averages are
/// always expressed relative to the owner: [v] = (v_left - v_right) n.
struct Facet {
  std::array<int, 2> vertices{};
  int left = -1;
  int right = -1;
  double length = 0.0;
  Point normal;

  bool is_boundary() const { return right < 0; }
};

/// Conforming triangulation of a polygonal domain in two dimensions.
///
/// Immutable after construction. Triangles are stored counter-clockwise; the
/// constructor reorients clockwise input and rejects degenerate triangles.
class Mesh {
 public:
  Mesh() = default;

  /// Builds all connectivity. When boundary_flags is empty the Dirichlet
  /// vertices are taken from the topological boundary.
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<bool> boundary_flags = {})
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    if (vertices_.empty() || triangles_.empty()) {
      throw std::invalid_argument("mesh: needs at least one vertex and one triangle");
    }
    const int nv = static_cast<int>(vertices_.size());
    for (auto& tri : triangles_) {
      for (int v : tri) {
        if (v < 0 || v >= nv) throw std::invalid_argument("mesh: triangle references unknown vertex");
      }
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
        throw std::invalid_argument("mesh: triangle with repeated vertex");
      }
      const double a = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
      if (!(std::abs(a) > 0.0)) throw std::invalid_argument("mesh: degenerate triangle");
      if (a < 0.0) std::swap(tri[1], tri[2]);
    }
    build_facets();
    build_boundary(std::move(boundary_flags));
    build_patches();
    build_sizes();
  }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return triangles_.size(); }
  std::size_t num_facets() const { return facets_.size(); }

  const Point& vertex(int i) const { return vertices_.at(static_cast<std::size_t>(i)); }
  std::span<const Point> vertices() const { return vertices_; }
  const std::array<int, 3>& triangle(int t) const { return triangles_.at(static_cast<std::size_t>(t)); }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }
  const Facet& facet(int f) const { return facets_.at(static_cast<std::size_t>(f)); }
  std::span<const Facet> facets() const { return facets_; }

  /// Facet indices of element t; entry a is the edge opposite local vertex a.
  const std::array<int, 3>& element_facets(int t) const { return element_facets_[t]; }

  bool is_boundary_vertex(int i) const { return boundary_[static_cast<std::size_t>(i)]; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }

  /// Elements containing vertex i (the node patch).
  std::span<const int> node_patch(int i) const {
    if (i < 0 || i >= static_cast<int>(vertices_.size())) {
      throw std::invalid_argument("mesh: vertex index out of range");
    }
    return {node_patch_.data() + node_patch_offsets_[i],
            node_patch_.data() + node_patch_offsets_[i + 1]};
  }

  /// Elements sharing at least one vertex with element t (t included).
  std::span<const int> element_patch(int t) const {
    if (t < 0 || t >= static_cast<int>(triangles_.size())) {
      throw std::invalid_argument("mesh: element index out of range");
    }
    return {element_patch_.data() + element_patch_offsets_[t],
            element_patch_.data() + element_patch_offsets_[t + 1]};
  }

  std::array<Point, 3> element_points(int t) const {
    const auto& tri = triangles_[t];
    return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
  }
  Point centroid(int t) const {
    const auto p = element_points(t);
    return {(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
  }

  double area(int t) const { return area_[t]; }
  /// Diameter h_T (longest edge).
  double diameter(int t) const { return diameter_[t]; }
  /// h_i = max{h_T : T in the node patch of i}.
  double vertex_size(int i) const { return vertex_size_[i]; }
  double h() const { return h_; }
  double h_min() const { return h_min_; }

  friend bool operator==(const Mesh& a, const Mesh& b) {
    return a.vertices_ == b.vertices_ && a.triangles_ == b.triangles_ && a.boundary_ == b.boundary_;
  }

 private:
  void build_facets() {
    const auto nv = static_cast<std::int64_t>(vertices_.size());
    std::unordered_map<std::int64_t, int> lookup;
    lookup.reserve(triangles_.size() * 2);
    element_facets_.assign(triangles_.size(), {-1, -1, -1});
    for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
      const auto& tri = triangles_[t];
      for (int a = 0; a < 3; ++a) {
        const int p = tri[(a + 1) % 3];
        const int q = tri[(a + 2) % 3];
        const std::int64_t key = std::min(p, q) * nv + std::max(p, q);
        auto [it, inserted] = lookup.try_emplace(key, static_cast<int>(facets_.size()));
        if (inserted) {
          Facet f;
          f.vertices = {p, q};
          f.left = t;
          const Point d = vertices_[q] - vertices_[p];
          f.length = norm(d);
          // (p, q) runs counter-clockwise around t, so the outward normal points right.
          f.normal = {d.y / f.length, -d.x / f.length};
          facets_.push_back(f);
        } else {
          Facet& f = facets_[it->second];
          if (f.right >= 0) throw std::invalid_argument("mesh: edge shared by more than two triangles");
          if (f.vertices[0] != q || f.vertices[1] != p) {
            throw std::invalid_argument("mesh: inconsistent orientation across an edge");
          }
          f.right = t;
        }
        element_facets_[t][a] = it->second;
      }
    }
  }

  void build_boundary(std::vector<bool> flags) {
    std::vector<bool> topological(vertices_.size(), false);
    for (const auto& f : facets_) {
      if (f.is_boundary()) topological[f.vertices[0]] = topological[f.vertices[1]] = true;
    }
    if (flags.empty()) {
      boundary_ = std::move(topological);
      return;
    }
    if (flags.size() != vertices_.size()) throw std::invalid_argument("mesh: boundary flag count mismatch");
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (topological[i] && !flags[i]) {
        throw std::invalid_argument("mesh: vertex " + std::to_string(i) + " lies on the boundary but is not flagged");
      }
    }
    boundary_ = std::move(flags);
  }

  void build_patches() {
    const std::size_t nv = vertices_.size();
    node_patch_offsets_.assign(nv + 1, 0);
    for (const auto& tri : triangles_) {
      for (int v : tri) ++node_patch_offsets_[v + 1];
    }
    for (std::size_t i = 0; i < nv; ++i) node_patch_offsets_[i + 1] += node_patch_offsets_[i];
    node_patch_.assign(node_patch_offsets_[nv], -1);
    std::vector<std::size_t> fill(node_patch_offsets_.begin(), node_patch_offsets_.end() - 1);
    for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
      for (int v : triangles_[t]) node_patch_[fill[v]++] = t;
    }
    for (std::size_t i = 0; i < nv; ++i) {
      if (node_patch_offsets_[i] == node_patch_offsets_[i + 1]) {
        throw std::invalid_argument("mesh: vertex " + std::to_string(i) + " belongs to no triangle");
      }
    }

    element_patch_offsets_.assign(triangles_.size() + 1, 0);
    std::vector<int> scratch;
    for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
      scratch.clear();
      for (int v : triangles_[t]) {
        scratch.insert(scratch.end(), node_patch_.begin() + static_cast<std::ptrdiff_t>(node_patch_offsets_[v]),
                       node_patch_.begin() + static_cast<std::ptrdiff_t>(node_patch_offsets_[v + 1]));
      }
      std::sort(scratch.begin(), scratch.end());
      scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
      element_patch_.insert(element_patch_.end(), scratch.begin(), scratch.end());
      element_patch_offsets_[t + 1] = element_patch_.size();
    }
  }

  void build_sizes() {
    const std::size_t nt = triangles_.size();
    area_.resize(nt);
    diameter_.resize(nt);
    h_ = 0.0;
    h_min_ = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < nt; ++t) {
      const auto p = element_points(static_cast<int>(t));
      area_[t] = signed_area(p[0], p[1], p[2]);
      diameter_[t] = std::max({norm(p[1] - p[0]), norm(p[2] - p[1]), norm(p[0] - p[2])});
      h_ = std::max(h_, diameter_[t]);
      h_min_ = std::min(h_min_, diameter_[t]);
    }
    vertex_size_.assign(vertices_.size(), 0.0);
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      for (int t : node_patch(static_cast<int>(i))) vertex_size_[i] = std::max(vertex_size_[i], diameter_[t]);
    }
  }

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Facet> facets_;
  std::vector<std::array<int, 3>> element_facets_;
  std::vector<bool> boundary_;
  std::vector<std::size_t> node_patch_offsets_;
  std::vector<int> node_patch_;
  std::vector<std::size_t> element_patch_offsets_;
  std::vector<int> element_patch_;
  std::vector<double> area_;
  std::vector<double> diameter_;
  std::vector<double> vertex_size_;
  double h_ = 0.0;
  double h_min_ = 0.0;
};

/// nx-by-ny grid of congruent rectangles, each cut by the diagonal from its
/// lower-left to its upper-right corner. Vertices are numbered
/// lexicographically by (y, x).
inline Mesh build_structured(int nx, int ny, const Rect& rect) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_structured: subdivision counts must be positive");
  if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0)) {
    throw std::invalid_argument("build_structured: degenerate rectangle");
  }
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1));
  for (int j = 0; j <= ny; ++j) {
    // Endpoints are set exactly so that the rectangle corners are reproduced.
    const double y = j == ny ? rect.y1 : rect.y0 + rect.height() * j / ny;
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? rect.x1 : rect.x0 + rect.width() * i / nx;
      vertices.push_back({x, y});
    }
  }
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(2 * static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

/// Red refinement: every triangle is split into four by its edge midpoints.
/// Coarse vertices keep their indices; midpoints follow in facet order.
inline Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  const int nv = static_cast<int>(mesh.num_vertices());
  std::vector<bool> flags(mesh.boundary_flags());
  for (const auto& f : mesh.facets()) {
    const Point& p = mesh.vertex(f.vertices[0]);
    const Point& q = mesh.vertex(f.vertices[1]);
    vertices.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
    flags.push_back(f.is_boundary());
  }
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(4 * mesh.num_elements());
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto& ef = mesh.element_facets(t);
    // Midpoint opposite local vertex a.
    const int m0 = nv + ef[0];
    const int m1 = nv + ef[1];
    const int m2 = nv + ef[2];
    triangles.push_back({tri[0], m2, m1});
    triangles.push_back({m2, tri[1], m0});
    triangles.push_back({m1, m0, tri[2]});
    triangles.push_back({m2, m0, m1});
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(flags));
}

}  // namespace egbp

#endif  // EGBP_MESH_HPP
