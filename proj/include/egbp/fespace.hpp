#ifndef EGBP_FESPACE_HPP
#define EGBP_FESPACE_HPP

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egbp/mesh.hpp"
#include "egbp/mesh_io.hpp"

namespace egbp {

using Vector = Eigen::VectorXd;
using ScalarField = std::function<double(Point)>;

/// v_h = v_h^1 + v_h^0: nodal values of the continuous piecewise linear part
/// at every mesh vertex, plus one constant per element.
struct EGFunction {
  Vector linear;
  Vector constant;

  static EGFunction zero(const Mesh& mesh) {
    return {Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices())),
            Vector::Zero(static_cast<Eigen::Index>(mesh.num_elements()))};
  }

  bool matches(const Mesh& mesh) const {
    return linear.size() == static_cast<Eigen::Index>(mesh.num_vertices()) &&
           constant.size() == static_cast<Eigen::Index>(mesh.num_elements());
  }

  friend EGFunction operator+(const EGFunction& a, const EGFunction& b) {
    return {a.linear + b.linear, a.constant + b.constant};
  }
};

/// Numbering of the Dirichlet-constrained linear space (interior vertices) and
/// of the element constants. Interior vertices keep the mesh vertex order.
class DofMap {
 public:
  explicit DofMap(const Mesh& mesh)
      : vertex_to_dof_(mesh.num_vertices(), -1), num_elements_(static_cast<int>(mesh.num_elements())) {
    for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) {
      if (mesh.is_boundary_vertex(v)) continue;
      vertex_to_dof_[v] = static_cast<int>(interior_.size());
      interior_.push_back(v);
    }
  }

  /// Dimension N of the constrained linear space.
  int num_linear() const { return static_cast<int>(interior_.size()); }
  int num_constant() const { return num_elements_; }
  int num_vertices() const { return static_cast<int>(vertex_to_dof_.size()); }

  /// Dof of vertex v, or -1 for a Dirichlet vertex.
  int linear_dof(int v) const { return vertex_to_dof_.at(static_cast<std::size_t>(v)); }
  int vertex_of(int dof) const { return interior_.at(static_cast<std::size_t>(dof)); }
  const std::vector<int>& interior_vertices() const { return interior_; }

  /// Interior-vertex values of an all-vertex vector.
  Vector restrict_linear(const Vector& all) const {
    Vector out(num_linear());
    for (int k = 0; k < num_linear(); ++k) out[k] = all[interior_[k]];
    return out;
  }

  /// All-vertex vector with the given interior values and zeros on the boundary.
  Vector extend_linear(const Vector& interior) const {
    Vector out = Vector::Zero(num_vertices());
    for (int k = 0; k < num_linear(); ++k) out[interior_[k]] = interior[k];
    return out;
  }

 private:
  std::vector<int> vertex_to_dof_;
  std::vector<int> interior_;
  int num_elements_ = 0;
};

namespace detail {
inline double checked_value(const ScalarField& g, Point p) {
  const double value = g(p);
  if (!std::isfinite(value)) {
    throw std::domain_error("non-finite field value at (" + format_double(p.x) + ", " + format_double(p.y) + ")");
  }
  return value;
}
}  // namespace detail

/// Nodal interpolant into the linear part; constants are zero.
inline EGFunction interpolate_lagrange(const Mesh& mesh, const ScalarField& g) {
  EGFunction out = EGFunction::zero(mesh);
  for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) out.linear[v] = detail::checked_value(g, mesh.vertex(v));
  return out;
}

/// Interpolated Dirichlet data on boundary vertices, extended by zero inside.
inline EGFunction dirichlet_lift(const Mesh& mesh, const ScalarField& boundary_data) {
  EGFunction out = EGFunction::zero(mesh);
  for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) {
    if (mesh.is_boundary_vertex(v)) out.linear[v] = detail::checked_value(boundary_data, mesh.vertex(v));
  }
  return out;
}

/// Value on element t: barycentric interpolation of the linear part plus the
/// element constant.
inline double evaluate(const Mesh& mesh, const EGFunction& f, int element, Point x) {
  if (element < 0 || element >= static_cast<int>(mesh.num_elements())) {
    throw std::invalid_argument("evaluate: element index out of range");
  }
  const auto lambda = barycentric(mesh.element_points(element), x);
  for (double l : lambda) {
    if (l < -1e-12) throw std::invalid_argument("evaluate: point lies outside the element");
  }
  const auto& tri = mesh.triangle(element);
  return lambda[0] * f.linear[tri[0]] + lambda[1] * f.linear[tri[1]] + lambda[2] * f.linear[tri[2]] +
         f.constant[element];
}

/// CSV with header "kind,index,value"; vertex rows first, then element rows.
inline void write_function_csv(std::ostream& out, const EGFunction& f) {
  out << "kind,index,value\n";
  for (Eigen::Index i = 0; i < f.linear.size(); ++i) out << "vertex," << i << ',' << format_double(f.linear[i]) << '\n';
  for (Eigen::Index t = 0; t < f.constant.size(); ++t) {
    out << "element," << t << ',' << format_double(f.constant[t]) << '\n';
  }
}

inline EGFunction read_function_csv(std::istream& in, const Mesh& mesh) {
  std::string line;
  if (!std::getline(in, line) || line != "kind,index,value") {
    throw std::invalid_argument("read_function_csv: missing header");
  }
  EGFunction f = EGFunction::zero(mesh);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string kind, index, value;
    std::getline(row, kind, ',');
    std::getline(row, index, ',');
    std::getline(row, value, ',');
    const long i = std::stol(index);
    Vector& target = kind == "vertex" ? f.linear : f.constant;
    if (kind != "vertex" && kind != "element") throw std::invalid_argument("read_function_csv: bad kind " + kind);
    if (i < 0 || i >= target.size()) throw std::invalid_argument("read_function_csv: index out of range");
    target[i] = parse_double(value);
  }
  return f;
}

}  // namespace egbp

#endif  // EGBP_FESPACE_HPP
