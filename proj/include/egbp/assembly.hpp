#ifndef EGBP_ASSEMBLY_HPP
#define EGBP_ASSEMBLY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <tuple>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "egbp/fespace.hpp"
#include "egbp/problem.hpp"
#include "egbp/quadrature.hpp"

namespace egbp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using LocalMatrix = std::array<std::array<double, 3>, 3>;

/// P1 stiffness matrix (grad phi_a, grad phi_b)_T.
inline LocalMatrix p1_stiffness(const std::array<Point, 3>& p) {
  const auto g = barycentric_gradients(p);
  const double area = signed_area(p[0], p[1], p[2]);
  LocalMatrix k{};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) k[a][b] = area * dot(g[a], g[b]);
  }
  return k;
}

/// P1 mass matrix (phi_a, phi_b)_T = |T|/12 (1 + delta_ab).
inline LocalMatrix p1_mass(const std::array<Point, 3>& p) {
  const double area = signed_area(p[0], p[1], p[2]);
  LocalMatrix m{};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) m[a][b] = area / 12.0 * (a == b ? 2.0 : 1.0);
  }
  return m;
}

/// Selects the parts of a_h to assemble; used to isolate individual terms.
struct OperatorTerms {
  bool volume = true;
  bool consistency = true;
  bool penalty = true;
};

/// Global numbering of the unconstrained operator: vertex v is row v, element
/// t is row num_vertices + t.
inline int element_row(const Mesh& mesh, int t) { return static_cast<int>(mesh.num_vertices()) + t; }

/// a_h on the full space (all vertex hats and all element indicators):
///   (eps grad w, grad v) + (mu w, v) - <{eps grad w}, [v]> - <{eps grad v}, [w]>
///   + <gamma (eps + mu h_F^2) / h_F^beta [w], [v]>
/// summed over all facets, boundary facets using {v} = v and [v] = v n.
///
/// Contributions are accumulated serially, elements first and facets second,
/// each in mesh order. Only the upper triangle is accumulated and mirrored, so
/// the result is symmetric bit for bit.
inline SparseMatrix assemble_operator(const Mesh& mesh, const ProblemSpec& spec, OperatorTerms terms = {}) {
  spec.validate();
  const int nv = static_cast<int>(mesh.num_vertices());
  const int n = nv + static_cast<int>(mesh.num_elements());
  std::vector<Triplet> upper;
  upper.reserve(10 * mesh.num_elements() + 21 * mesh.num_facets());
  const auto add = [&upper](int i, int j, double value) {
    if (i <= j) {
      upper.emplace_back(i, j, value);
    } else {
      upper.emplace_back(j, i, value);
    }
  };

  if (terms.volume) {
    for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
      const auto& tri = mesh.triangle(t);
      const auto p = mesh.element_points(t);
      const auto k = p1_stiffness(p);
      const auto m = p1_mass(p);
      const double area = mesh.area(t);
      for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) add(tri[a], tri[b], spec.epsilon * k[a][b] + spec.mu * m[a][b]);
        add(tri[a], element_row(mesh, t), spec.mu * area / 3.0);
      }
      add(element_row(mesh, t), element_row(mesh, t), spec.mu * area);
    }
  }

  // Facet dofs: the normal flux {eps grad phi} . n (constant on the facet) and
  // the scalar jump coefficient at each Gauss point.
  struct FacetDof {
    int row;
    double flux;
    std::array<double, 2> jump;
  };
  std::vector<FacetDof> dofs;
  dofs.reserve(6);
  const auto& gauss = quadrature::gauss2;
  for (const auto& facet : mesh.facets()) {
    dofs.clear();
    const auto add_side = [&](int element, double sign, double flux_weight) {
      const auto& tri = mesh.triangle(element);
      const auto grads = barycentric_gradients(mesh.element_points(element));
      for (int a = 0; a < 3; ++a) {
        const double flux = flux_weight * spec.epsilon * dot(grads[a], facet.normal);
        auto it = std::find_if(dofs.begin(), dofs.end(), [&](const FacetDof& d) { return d.row == tri[a]; });
        if (it == dofs.end()) {
          // The trace of a hat function on the facet depends only on the
          // facet endpoints, so it is identical from both sides and the
          // continuous part never jumps across an interior facet.
          std::array<double, 2> trace{0.0, 0.0};
          if (facet.is_boundary()) {
            for (int q = 0; q < 2; ++q) {
              if (tri[a] == facet.vertices[0]) trace[q] = 1.0 - gauss[q].t;
              if (tri[a] == facet.vertices[1]) trace[q] = gauss[q].t;
            }
          }
          dofs.push_back({tri[a], flux, trace});
        } else {
          it->flux += flux;
        }
      }
      dofs.push_back({element_row(mesh, element), 0.0, {sign, sign}});
    };
    if (facet.is_boundary()) {
      add_side(facet.left, 1.0, 1.0);
    } else {
      add_side(facet.left, 1.0, 0.5);
      add_side(facet.right, -1.0, 0.5);
    }
    const double sigma = spec.facet_penalty(facet.length);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      for (std::size_t j = i; j < dofs.size(); ++j) {
        double value = 0.0;
        for (int q = 0; q < 2; ++q) {
          const double w = gauss[q].weight * facet.length;
          if (terms.consistency) {
            value -= w * (dofs[i].flux * dofs[j].jump[q] + dofs[j].flux * dofs[i].jump[q]);
          }
          if (terms.penalty) value += w * sigma * dofs[i].jump[q] * dofs[j].jump[q];
        }
        if (value != 0.0) add(dofs[i].row, dofs[j].row, value);
      }
    }
  }

  SparseMatrix triangular(n, n);
  triangular.setFromTriplets(upper.begin(), upper.end());
  SparseMatrix full = triangular.selfadjointView<Eigen::Upper>();
  full.makeCompressed();
  return full;
}

/// Blocks of a_h and s_h together with the right-hand side of the scheme.
///
/// A11 acts on the Dirichlet-constrained linear space, A00 on the element
/// constants and A10 couples them (rows linear, columns constants). S1 is the
/// diagonal of s_h. M1 is the P1 mass matrix on the constrained space and
/// element_areas the diagonal of the V^0 mass matrix; both measure increments.
struct BlockSystem {
  SparseMatrix A11;
  SparseMatrix A10;
  SparseMatrix A00;
  Vector S1;
  Vector b1;
  Vector b0;
  SparseMatrix M1;
  Vector element_areas;

  int num_linear() const { return static_cast<int>(A11.rows()); }
  int num_constant() const { return static_cast<int>(A00.rows()); }

  /// The coupled matrix [[A11, A10], [A10^T, A00]].
  SparseMatrix monolithic() const {
    const int n1 = num_linear();
    const int n0 = num_constant();
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(A11.nonZeros() + 2 * A10.nonZeros() + A00.nonZeros()));
    for (int c = 0; c < A11.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(A11, c); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
    }
    for (int c = 0; c < A10.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(A10, c); it; ++it) {
        entries.emplace_back(it.row(), n1 + it.col(), it.value());
        entries.emplace_back(n1 + it.col(), it.row(), it.value());
      }
    }
    for (int c = 0; c < A00.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(A00, c); it; ++it) entries.emplace_back(n1 + it.row(), n1 + it.col(), it.value());
    }
    SparseMatrix a(n1 + n0, n1 + n0);
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
  }

  Vector rhs() const {
    Vector b(b1.size() + b0.size());
    b << b1, b0;
    return b;
  }
};

namespace detail {

/// Splits the unconstrained operator into the constrained blocks.
inline void extract_blocks(const Mesh& mesh, const DofMap& dofs, const SparseMatrix& full, BlockSystem& out) {
  const int nv = static_cast<int>(mesh.num_vertices());
  std::vector<Triplet> a11, a10, a00;
  for (int c = 0; c < full.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int col = static_cast<int>(it.col());
      const bool r_elem = r >= nv;
      const bool c_elem = col >= nv;
      const int r_dof = r_elem ? r - nv : dofs.linear_dof(r);
      const int c_dof = c_elem ? col - nv : dofs.linear_dof(col);
      if (r_dof < 0 || c_dof < 0) continue;  // Dirichlet vertex
      if (!r_elem && !c_elem) {
        a11.emplace_back(r_dof, c_dof, it.value());
      } else if (!r_elem && c_elem) {
        a10.emplace_back(r_dof, c_dof, it.value());
      } else if (r_elem && c_elem) {
        a00.emplace_back(r_dof, c_dof, it.value());
      }
    }
  }
  const int n1 = dofs.num_linear();
  const int n0 = dofs.num_constant();
  out.A11.resize(n1, n1);
  out.A11.setFromTriplets(a11.begin(), a11.end());
  out.A10.resize(n1, n0);
  out.A10.setFromTriplets(a10.begin(), a10.end());
  out.A00.resize(n0, n0);
  out.A00.setFromTriplets(a00.begin(), a00.end());
}

/// (f, phi) for every vertex hat and every element indicator, in the
/// unconstrained numbering.
inline Vector load_vector(const Mesh& mesh, const ProblemSpec& spec) {
  const int nv = static_cast<int>(mesh.num_vertices());
  Vector load = Vector::Zero(nv + static_cast<int>(mesh.num_elements()));
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto p = mesh.element_points(t);
    const double area = mesh.area(t);
    std::array<double, 3> hats{0.0, 0.0, 0.0};
    double mean = 0.0;
    if (spec.source_quadrature == SourceQuadrature::centroid) {
      const double value = spec.source(mesh.centroid(t));
      hats = {value / 3.0, value / 3.0, value / 3.0};
      mean = value;
    } else {
      for (const auto& qp : quadrature::dunavant4) {
        const auto& l = qp.barycentric;
        const Point x{l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x, l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y};
        const double value = spec.source(x);
        for (int a = 0; a < 3; ++a) hats[a] += qp.weight * value * l[a];
        mean += qp.weight * value;
      }
    }
    if (!std::isfinite(mean)) throw std::domain_error("assembly: non-finite source quadrature on element " + std::to_string(t));
    for (int a = 0; a < 3; ++a) load[tri[a]] += area * hats[a];
    load[nv + t] += area * mean;
  }
  return load;
}

inline std::pair<Vector, Vector> rhs_from_operator(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs,
                                                   const SparseMatrix& full, const EGFunction& lift) {
  if (!lift.matches(mesh)) throw std::invalid_argument("assemble_rhs: lift does not match the mesh");
  if (lift.constant.cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("assemble_rhs: the lift must have a zero constant part");
  }
  const int nv = static_cast<int>(mesh.num_vertices());
  Vector lifted = Vector::Zero(full.rows());
  lifted.head(nv) = lift.linear;
  const Vector rhs = load_vector(mesh, spec) - full * lifted;
  Vector b1(dofs.num_linear());
  for (int k = 0; k < dofs.num_linear(); ++k) b1[k] = rhs[dofs.vertex_of(k)];
  Vector b0 = rhs.tail(dofs.num_constant());
  return {std::move(b1), std::move(b0)};
}

inline SparseMatrix constrained_p1_mass(const Mesh& mesh, const DofMap& dofs) {
  std::vector<Triplet> entries;
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto m = p1_mass(mesh.element_points(t));
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const int i = dofs.linear_dof(tri[a]);
        const int j = dofs.linear_dof(tri[b]);
        if (i >= 0 && j >= 0) entries.emplace_back(i, j, m[a][b]);
      }
    }
  }
  SparseMatrix m1(dofs.num_linear(), dofs.num_linear());
  m1.setFromTriplets(entries.begin(), entries.end());
  return m1;
}

inline Vector element_areas(const Mesh& mesh) {
  Vector areas(static_cast<Eigen::Index>(mesh.num_elements()));
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) areas[t] = mesh.area(t);
  return areas;
}

}  // namespace detail

/// Matrix blocks of a_h (no right-hand side, no stabilizer).
inline BlockSystem assemble_a(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs) {
  BlockSystem system;
  detail::extract_blocks(mesh, dofs, assemble_operator(mesh, spec), system);
  system.M1 = detail::constrained_p1_mass(mesh, dofs);
  system.element_areas = detail::element_areas(mesh);
  return system;
}

/// Diagonal of s_h: alpha (eps h_i^{d-2} + mu h_i^d) with d = 2.
inline Vector assemble_s(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs) {
  Vector s(dofs.num_linear());
  for (int k = 0; k < dofs.num_linear(); ++k) {
    const double hi = mesh.vertex_size(dofs.vertex_of(k));
    s[k] = spec.alpha * (spec.epsilon + spec.mu * hi * hi);
  }
  return s;
}

/// b_h(v) = (f, v) - a_h(lift, v), split into the linear and constant blocks.
inline std::pair<Vector, Vector> assemble_rhs(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs,
                                              const EGFunction& lift) {
  return detail::rhs_from_operator(mesh, spec, dofs, assemble_operator(mesh, spec), lift);
}

/// Everything the solvers need, sharing one operator assembly.
inline BlockSystem assemble_system(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs) {
  BlockSystem system;
  const SparseMatrix full = assemble_operator(mesh, spec);
  detail::extract_blocks(mesh, dofs, full, system);
  system.S1 = assemble_s(mesh, spec, dofs);
  std::tie(system.b1, system.b0) = detail::rhs_from_operator(mesh, spec, dofs, full, dirichlet_lift(mesh, spec.boundary));
  system.M1 = detail::constrained_p1_mass(mesh, dofs);
  system.element_areas = detail::element_areas(mesh);
  return system;
}

/// Mass and unweighted jump matrices on the element constants:
/// m(w, v) = (w, v) and j(w, v) = <[w], [v]> over all facets.
struct ConstantMatrices {
  SparseMatrix M0;
  SparseMatrix J0;
};

inline ConstantMatrices assemble_M_J(const Mesh& mesh, const DofMap& dofs) {
  const int n0 = dofs.num_constant();
  ConstantMatrices out;
  out.M0.resize(n0, n0);
  std::vector<Triplet> m, j;
  for (int t = 0; t < n0; ++t) m.emplace_back(t, t, mesh.area(t));
  for (const auto& f : mesh.facets()) {
    j.emplace_back(f.left, f.left, f.length);
    if (!f.is_boundary()) {
      j.emplace_back(f.right, f.right, f.length);
      j.emplace_back(f.left, f.right, -f.length);
      j.emplace_back(f.right, f.left, -f.length);
    }
  }
  out.M0.setFromTriplets(m.begin(), m.end());
  out.J0.resize(n0, n0);
  out.J0.setFromTriplets(j.begin(), j.end());
  return out;
}

/// Coordinate listing "row col value", sorted by (row, col), 17 significant digits.
inline void write_matrix_coordinates(std::ostream& out, const SparseMatrix& a) {
  std::vector<std::tuple<long, long, double>> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (int c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [r, c, v] : entries) out << r << ' ' << c << ' ' << format_double(v) << '\n';
}

}  // namespace egbp

#endif  // EGBP_ASSEMBLY_HPP
