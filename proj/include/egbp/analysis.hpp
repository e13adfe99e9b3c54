#ifndef EGBP_ANALYSIS_HPP
#define EGBP_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "egbp/assembly.hpp"
#include "egbp/condition.hpp"
#include "egbp/quadrature.hpp"
#include "egbp/solver.hpp"

namespace egbp {

using VectorField = std::function<Point(Point)>;

namespace detail {
inline Point map_barycentric(const std::array<Point, 3>& p, const std::array<double, 3>& l) {
  return {l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x, l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y};
}
}  // namespace detail

/// ||u - u_h||_0 with the six-point rule on every element; the constant part
/// of u_h is included.
inline double error_l2(const Mesh& mesh, const ScalarField& exact, const EGFunction& uh) {
  if (!uh.matches(mesh)) throw std::invalid_argument("error_l2: function does not match the mesh");
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    const auto p = mesh.element_points(t);
    const auto& tri = mesh.triangle(t);
    double local = 0.0;
    for (const auto& qp : quadrature::dunavant4) {
      const auto& l = qp.barycentric;
      const double value = l[0] * uh.linear[tri[0]] + l[1] * uh.linear[tri[1]] + l[2] * uh.linear[tri[2]] + uh.constant[t];
      const double e = exact(detail::map_barycentric(p, l)) - value;
      local += qp.weight * e * e;
    }
    sum += mesh.area(t) * local;
  }
  return std::sqrt(sum);
}

/// Broken gradient error of the linear part; constants carry no gradient.
inline double error_h1_linear(const Mesh& mesh, const VectorField& grad_exact, const EGFunction& uh) {
  if (!uh.matches(mesh)) throw std::invalid_argument("error_h1_linear: function does not match the mesh");
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    const auto p = mesh.element_points(t);
    const auto& tri = mesh.triangle(t);
    const auto g = barycentric_gradients(p);
    Point grad_h{};
    for (int a = 0; a < 3; ++a) grad_h = grad_h + uh.linear[tri[a]] * g[a];
    double local = 0.0;
    for (const auto& qp : quadrature::dunavant4) {
      const Point e = grad_exact(detail::map_barycentric(p, qp.barycentric)) - grad_h;
      local += qp.weight * dot(e, e);
    }
    sum += mesh.area(t) * local;
  }
  return std::sqrt(sum);
}

/// Weight (eps + mu h_F^2) / h_F of the facet norm.
inline double facet_norm_weight(const ProblemSpec& spec, double h_facet) {
  return (spec.epsilon + spec.mu * h_facet * h_facet) / h_facet;
}

/// ||[v0]||_{F_h} of a piecewise constant; boundary facets use [v0] = v0 n.
inline double jump_norm(const Mesh& mesh, const ProblemSpec& spec, const Vector& v0) {
  if (v0.size() != static_cast<Eigen::Index>(mesh.num_elements())) {
    throw std::invalid_argument("jump_norm: constant part does not match the mesh");
  }
  double sum = 0.0;
  for (const auto& f : mesh.facets()) {
    const double jump = f.is_boundary() ? v0[f.left] : v0[f.left] - v0[f.right];
    sum += facet_norm_weight(spec, f.length) * f.length * jump * jump;
  }
  return std::sqrt(sum);
}

enum class FacetSet { all, interior, boundary };

/// ||[v]||_{F_h} of a full EG function, optionally restricted to interior or
/// boundary facets. Both traces are integrated with the two-point rule, which
/// is exact for the squared jump of a linear-plus-constant function.
inline double jump_norm(const Mesh& mesh, const ProblemSpec& spec, const EGFunction& v, FacetSet set = FacetSet::all) {
  if (!v.matches(mesh)) throw std::invalid_argument("jump_norm: function does not match the mesh");
  double sum = 0.0;
  for (const auto& f : mesh.facets()) {
    if ((set == FacetSet::interior && f.is_boundary()) || (set == FacetSet::boundary && !f.is_boundary())) continue;
    double integral = 0.0;
    if (f.is_boundary()) {
      const double a = v.linear[f.vertices[0]];
      const double b = v.linear[f.vertices[1]];
      for (const auto& qp : quadrature::gauss2) {
        const double trace = (1.0 - qp.t) * a + qp.t * b + v.constant[f.left];
        integral += qp.weight * trace * trace;
      }
    } else {
      // Linear parts agree on an interior facet only if the function is
      // continuous; evaluate both traces instead of assuming it.
      const std::array<Point, 3> pl = mesh.element_points(f.left), pr = mesh.element_points(f.right);
      const auto& tl = mesh.triangle(f.left);
      const auto& tr = mesh.triangle(f.right);
      const Point a = mesh.vertex(f.vertices[0]), b = mesh.vertex(f.vertices[1]);
      for (const auto& qp : quadrature::gauss2) {
        const Point x = a + qp.t * (b - a);
        const auto ll = barycentric(pl, x), lr = barycentric(pr, x);
        double left = v.constant[f.left], right = v.constant[f.right];
        for (int k = 0; k < 3; ++k) {
          left += ll[k] * v.linear[tl[k]];
          right += lr[k] * v.linear[tr[k]];
        }
        integral += qp.weight * (left - right) * (left - right);
      }
    }
    sum += facet_norm_weight(spec, f.length) * f.length * integral;
  }
  return std::sqrt(sum);
}

/// ||v0||_0 of a piecewise constant.
inline double const_l2(const Mesh& mesh, const Vector& v0) {
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) sum += mesh.area(t) * v0[t] * v0[t];
  return std::sqrt(sum);
}

/// Estimated order log2(coarse / fine); NaN (rendered "--") if either error is
/// not a positive finite number.
inline double eoc(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0) || !std::isfinite(coarse) || !std::isfinite(fine)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::log2(coarse / fine);
}

/// Least-squares slope of log(value) against log(h) over the last `count`
/// entries. Positive for quantities that decay under refinement, negative for
/// quantities that grow.
inline double fitted_rate(const std::vector<double>& h, const std::vector<double>& values, std::size_t count = 3) {
  if (h.size() != values.size()) throw std::invalid_argument("fitted_rate: size mismatch");
  count = std::min(count, h.size());
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t first = h.size() - count;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = first; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(values[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    mx += std::log(h[i]);
    my += std::log(values[i]);
  }
  mx /= static_cast<double>(count);
  my /= static_cast<double>(count);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = first; i < h.size(); ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(values[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Invariant interval from the comparison principle with
/// U = max(||f||_inf / mu, ||u_D||_inf): [0, U] for non-negative data, else [-U, U].
inline Bounds comparison_bound(double f_sup, double boundary_sup, double mu, bool nonnegative_data) {
  if (!(mu > 0.0)) throw std::invalid_argument("comparison_bound: mu must be positive");
  const double u = std::max(f_sup / mu, boundary_sup);
  return nonnegative_data ? Bounds{0.0, u} : Bounds{-u, u};
}

/// Samples f at the six-point quadrature nodes of every element and u_D at the
/// boundary vertices of the mesh.
inline Bounds comparison_bound(const Mesh& mesh, const ProblemSpec& spec) {
  double f_sup = 0.0, g_sup = 0.0;
  bool nonnegative = true;
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    const auto p = mesh.element_points(t);
    for (const auto& qp : quadrature::dunavant4) {
      const double value = spec.source(detail::map_barycentric(p, qp.barycentric));
      f_sup = std::max(f_sup, std::abs(value));
      nonnegative = nonnegative && value >= 0.0;
    }
    if (spec.source_quadrature == SourceQuadrature::centroid) {
      const double value = spec.source(mesh.centroid(t));
      f_sup = std::max(f_sup, std::abs(value));
      nonnegative = nonnegative && value >= 0.0;
    }
  }
  for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) {
    if (!mesh.is_boundary_vertex(v)) continue;
    const double value = spec.boundary(mesh.vertex(v));
    g_sup = std::max(g_sup, std::abs(value));
    nonnegative = nonnegative && value >= 0.0;
  }
  return comparison_bound(f_sup, g_sup, spec.mu, nonnegative);
}

/// r_T = b_h(1_T) - a_h(u+, 1_T) per element. s_h never acts on 1_T.
inline Vector conservation_report(const BlockSystem& system, const DofMap& dofs, const EGFunction& u_plus) {
  const Vector u1 = dofs.restrict_linear(u_plus.linear);
  return system.b0 - system.A10.transpose() * u1 - system.A00 * u_plus.constant;
}

inline Vector conservation_report(const BlockSystem& system, const DofMap& dofs, const EGSolution& solution) {
  return conservation_report(system, dofs, solution.u_plus);
}

struct BoundViolation {
  double min_val = 0.0;
  double max_val = 0.0;
  int violation_count = 0;
};

/// Extremes over all element-vertex evaluations; a linear-plus-constant
/// function attains its extremes there. Values outside [a - tol, b + tol] count.
inline BoundViolation bound_violation(const Mesh& mesh, const EGFunction& v, const Bounds& bounds, double tol = 0.0) {
  if (!v.matches(mesh)) throw std::invalid_argument("bound_violation: function does not match the mesh");
  BoundViolation out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    for (int vertex : mesh.triangle(t)) {
      const double value = v.linear[vertex] + v.constant[t];
      out.min_val = std::min(out.min_val, value);
      out.max_val = std::max(out.max_val, value);
      if (!bounds.contains(value, tol)) ++out.violation_count;
    }
  }
  return out;
}

/// Sum over facets of h_F^{-1} ||[v0]||_F^2 as a matrix: every facet adds one
/// unit of graph-Laplacian coupling, boundary facets one unit on the diagonal.
inline SparseMatrix scaled_jump_matrix(const Mesh& mesh) {
  std::vector<Triplet> entries;
  for (const auto& f : mesh.facets()) {
    entries.emplace_back(f.left, f.left, 1.0);
    if (!f.is_boundary()) {
      entries.emplace_back(f.right, f.right, 1.0);
      entries.emplace_back(f.left, f.right, -1.0);
      entries.emplace_back(f.right, f.left, -1.0);
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_elements());
  SparseMatrix j(n, n);
  j.setFromTriplets(entries.begin(), entries.end());
  return j;
}

/// ||v0||_0 / (sum_F h_F^{-1} ||[v0]||_F^2)^{1/2} for one sample.
inline double poincare_ratio(const Mesh& mesh, const Vector& v0) {
  const double jumps = v0.dot(scaled_jump_matrix(mesh) * v0);
  return const_l2(mesh, v0) / std::sqrt(jumps);
}

/// Sharp broken Poincare constant of the mesh: the square root of the largest
/// generalized eigenvalue of (M0, J), computed as lambda_max(M0^{1/2} J^{-1} M0^{1/2}).
inline double broken_poincare_constant(const Mesh& mesh) {
  const SparseMatrix j = scaled_jump_matrix(mesh);
  const Vector root_mass = detail::element_areas(mesh).cwiseSqrt();
  const SpdSolver inverse(j, "jump matrix");
  const auto apply = [&](const Vector& x) -> Vector { return root_mass.cwiseProduct(inverse.solve(root_mass.cwiseProduct(x))); };
  const LanczosResult top = lanczos_largest(apply, j.rows(), 1e-12);
  if (!top.converged) throw SolverError("broken_poincare_constant: Lanczos did not converge");
  return std::sqrt(top.eigenvalue);
}

}  // namespace egbp

#endif  // EGBP_ANALYSIS_HPP
