#ifndef EGBP_LIMITER_HPP
#define EGBP_LIMITER_HPP

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "egbp/fespace.hpp"
#include "egbp/problem.hpp"

namespace egbp {

/// Minimum (under) and maximum (over) of the element constants over the node
/// patch of every interior vertex, indexed by linear dof.
struct PatchExtremes {
  Vector under;
  Vector over;
};

inline PatchExtremes patch_extremes(const Mesh& mesh, const DofMap& dofs, const Vector& w0) {
  if (w0.size() != static_cast<Eigen::Index>(mesh.num_elements())) {
    throw std::invalid_argument("patch_extremes: constant part does not match the mesh");
  }
  PatchExtremes out{Vector(dofs.num_linear()), Vector(dofs.num_linear())};
  for (int k = 0; k < dofs.num_linear(); ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int t : mesh.node_patch(dofs.vertex_of(k))) {
      lo = std::min(lo, w0[t]);
      hi = std::max(hi, w0[t]);
    }
    out.under[k] = lo;
    out.over[k] = hi;
  }
  return out;
}

/// max(a - under, min(v, b - over)). The outer max is applied last, so the
/// lower clamp wins when the admissible interval is empty.
inline double truncate_node(double value, double under, double over, const Bounds& bounds) {
  return std::max(bounds.lower - under, std::min(value, bounds.upper - over));
}

/// Nodal truncation of a vector over the constrained linear dofs.
inline Vector truncate_linear(const Vector& u1, const PatchExtremes& extremes, const Bounds& bounds) {
  Vector out(u1.size());
  for (Eigen::Index k = 0; k < u1.size(); ++k) out[k] = truncate_node(u1[k], extremes.under[k], extremes.over[k], bounds);
  return out;
}

/// P^{w}(v): truncated nodal values at interior vertices, Dirichlet vertices
/// untouched, constant part replaced by w0.
inline EGFunction apply_P(const Mesh& mesh, const DofMap& dofs, const Vector& w0, const EGFunction& v,
                          const Bounds& bounds) {
  if (!v.matches(mesh)) throw std::invalid_argument("apply_P: function does not match the mesh");
  const PatchExtremes extremes = patch_extremes(mesh, dofs, w0);
  EGFunction out{v.linear, w0};
  for (int k = 0; k < dofs.num_linear(); ++k) {
    const int vertex = dofs.vertex_of(k);
    out.linear[vertex] = truncate_node(v.linear[vertex], extremes.under[k], extremes.over[k], bounds);
  }
  return out;
}

/// Q^{w}(v) = v^1 - [P^{w}(v)]^1; the constant part is zero.
inline EGFunction apply_Q(const Mesh& mesh, const DofMap& dofs, const Vector& w0, const EGFunction& v,
                          const Bounds& bounds) {
  const EGFunction p = apply_P(mesh, dofs, w0, v, bounds);
  return {v.linear - p.linear, Vector::Zero(static_cast<Eigen::Index>(mesh.num_elements()))};
}

struct FeasibilityReport {
  bool feasible = true;
  int worst_dof = -1;  // argmin of the slack (b - over) - (a - under)
  double min_slack = std::numeric_limits<double>::infinity();
};

/// Checks a - under_i <= b - over_i at every interior vertex.
inline FeasibilityReport feasibility_check(const PatchExtremes& extremes, const Bounds& bounds) {
  FeasibilityReport report;
  for (Eigen::Index k = 0; k < extremes.under.size(); ++k) {
    const double slack = (bounds.upper - extremes.over[k]) - (bounds.lower - extremes.under[k]);
    if (slack < report.min_slack) {
      report.min_slack = slack;
      report.worst_dof = static_cast<int>(k);
    }
  }
  report.feasible = report.worst_dof < 0 || report.min_slack >= 0.0;
  return report;
}

}  // namespace egbp

#endif  // EGBP_LIMITER_HPP
