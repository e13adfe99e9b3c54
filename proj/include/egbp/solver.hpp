#ifndef EGBP_SOLVER_HPP
#define EGBP_SOLVER_HPP

#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include "egbp/assembly.hpp"
#include "egbp/limiter.hpp"
#include "egbp/linear_solver.hpp"
#include "egbp/mesh_io.hpp"

namespace egbp {

/// History of the nested fixed-point iteration.
struct SolveTrace {
  int outer_iters = 0;
  std::vector<int> inner_iters_per_outer;
  std::vector<std::vector<double>> inner_residual_histories;  // L2 increments per inner step
  std::vector<double> outer_increments;                       // ||u0_{m+1} - u0_m||_0
  std::vector<bool> feasible_per_outer;
  bool converged = false;
  bool inner_converged = true;  // every inner loop reached tol_inner
  int feasibility_violations = 0;
};

/// Result of the bound-preserving solve. Both functions hold the complete
/// discrete approximation: the interpolated Dirichlet data sits on the boundary
/// vertices, the computed V_h part on interior vertices and elements.
struct EGSolution {
  EGFunction u;       // fixed point u_h
  EGFunction u_plus;  // P^{u_h}(u_h)
  SolveTrace trace;
  double nonlinear_residual = 0.0;  // ||b - A u+ - S u-||_2 over all basis functions
};

/// Blocks of the scheme plus factorizations of A11 and A00, shared by every
/// inner and outer step.
class SplitSolver {
 public:
  SplitSolver(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs)
      : SplitSolver(mesh, spec, dofs, assemble_system(mesh, spec, dofs)) {}

  SplitSolver(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs, BlockSystem system)
      : mesh_(mesh),
        spec_(spec),
        dofs_(dofs),
        system_(std::move(system)),
        a11_(system_.A11, "A11"),
        a00_(system_.A00, "A00"),
        lift_(dirichlet_lift(mesh, spec.boundary)) {
    spec_.validate();
  }

  const BlockSystem& system() const { return system_; }
  const ProblemSpec& spec() const { return spec_; }

  /// Monolithic solve of a_h(u, v) = b_h(v) over V_h; returns [u1; u0].
  Vector solve_monolithic() const {
    const SparseMatrix a = system_.monolithic();
    return SpdSolver(a, "monolithic A").solve(system_.rhs());
  }

  struct InnerResult {
    Vector u1;
    int iterations = 0;
    bool converged = false;
    std::vector<double> increments;
  };

  /// Damped Richardson iteration for Step 1 with the constants frozen at w0:
  ///   B_n (u^{n+1} - u^n) = omega (b1 - A10 w0 - A11 P(u^n) - S Q(u^n)),
  /// where B_n is A11, plus S1 on the nodes truncated at u^n by default.
  /// Stops once the L2 norm of the increment drops to tol_inner.
  InnerResult inner_richardson(const Vector& u1_start, const Vector& w0) const {
    const PatchExtremes extremes = patch_extremes(mesh_, dofs_, w0);
    const Vector fixed = spec_.paper_verbatim_inner ? Vector(system_.b1) : Vector(system_.b1 - system_.A10 * w0);
    InnerResult result{u1_start, 0, false, {}};
    for (int n = 0; n < spec_.max_inner; ++n) {
      const Vector plus = truncate_linear(result.u1, extremes, spec_.bounds);
      const Vector minus = result.u1 - plus;
      const Vector residual = fixed - system_.A11 * plus - system_.S1.cwiseProduct(minus);
      const Vector step = spec_.omega * inner_solver(result.u1, plus).solve(residual);
      result.u1 += step;
      const double increment = linear_l2(step);
      result.increments.push_back(increment);
      result.iterations = n + 1;
      if (increment <= spec_.tol_inner) {
        result.converged = true;
        break;
      }
    }
    return result;
  }

  /// Step 2: A00 u0 = b0 - A10^T [P^{w0}(u1_new)]^1. The verbatim variant uses
  /// the untruncated previous linear part u1_previous instead.
  Vector outer_constant_solve(const Vector& u1_new, const Vector& w0_frozen, const Vector& u1_previous) const {
    Vector coupling;
    if (spec_.paper_verbatim_outer) {
      coupling = u1_previous;
    } else {
      coupling = truncate_linear(u1_new, patch_extremes(mesh_, dofs_, w0_frozen), spec_.bounds);
    }
    return a00_.solve(system_.b0 - system_.A10.transpose() * coupling);
  }
  Vector outer_constant_solve(const Vector& u1_new, const Vector& w0_frozen) const {
    return outer_constant_solve(u1_new, w0_frozen, u1_new);
  }

  /// Alternates inner_richardson and outer_constant_solve, starting from the
  /// standard EG solution, until the constants change by at most tol_outer.
  EGSolution solve() const {
    const Vector init = solve_monolithic();
    Vector u1 = init.head(dofs_.num_linear());
    Vector w0 = init.tail(dofs_.num_constant());
    EGSolution out;
    SolveTrace& trace = out.trace;
    for (int m = 0; m < spec_.max_outer; ++m) {
      const bool feasible = feasibility_check(patch_extremes(mesh_, dofs_, w0), spec_.bounds).feasible;
      trace.feasible_per_outer.push_back(feasible);
      if (!feasible) ++trace.feasibility_violations;

      InnerResult inner = inner_richardson(u1, w0);
      trace.inner_iters_per_outer.push_back(inner.iterations);
      trace.inner_residual_histories.push_back(std::move(inner.increments));
      trace.inner_converged = trace.inner_converged && inner.converged;

      Vector w0_next = outer_constant_solve(inner.u1, w0, u1);
      const double increment = constant_l2(w0_next - w0);
      trace.outer_increments.push_back(increment);
      trace.outer_iters = m + 1;
      u1 = std::move(inner.u1);
      w0 = std::move(w0_next);
      if (increment <= spec_.tol_outer) {
        trace.converged = true;
        break;
      }
    }
    out.u = assemble_function(u1, w0);
    out.u_plus = apply_P(mesh_, dofs_, out.u.constant, out.u, spec_.bounds);
    out.nonlinear_residual = nonlinear_residual(out.u).norm();
    return out;
  }

  /// b - A [u+^1; u^0] - [S u^-; 0] over the constrained linear dofs and all
  /// element indicators; zero exactly at a solution of the nonlinear scheme.
  Vector nonlinear_residual(const EGFunction& u) const {
    const Vector u1 = dofs_.restrict_linear(u.linear);
    const Vector plus = truncate_linear(u1, patch_extremes(mesh_, dofs_, u.constant), spec_.bounds);
    const Vector minus = u1 - plus;
    Vector r(dofs_.num_linear() + dofs_.num_constant());
    r.head(dofs_.num_linear()) =
        system_.b1 - system_.A11 * plus - system_.A10 * u.constant - system_.S1.cwiseProduct(minus);
    r.tail(dofs_.num_constant()) = system_.b0 - system_.A10.transpose() * plus - system_.A00 * u.constant;
    return r;
  }

  /// Interior values and constants combined with the Dirichlet lift.
  EGFunction assemble_function(const Vector& u1, const Vector& u0) const {
    return {dofs_.extend_linear(u1) + lift_.linear, u0};
  }

  double linear_l2(const Vector& d) const { return std::sqrt(std::max(0.0, d.dot(system_.M1 * d))); }
  double constant_l2(const Vector& d) const {
    return std::sqrt(d.cwiseProduct(d).dot(system_.element_areas));
  }

 private:
  /// Solver for A11 + diag(S1 on the active nodes); plain A11 when none are
  /// active or the verbatim operator is selected. The last factorization is
  /// cached since the active set rarely changes between inner steps.
  const SpdSolver& inner_solver(const Vector& u1, const Vector& plus) const {
    if (spec_.inner_operator == InnerOperator::a_h) return a11_;
    std::vector<int> active;
    for (Eigen::Index k = 0; k < u1.size(); ++k) {
      if (plus[k] != u1[k]) active.push_back(static_cast<int>(k));
    }
    if (active.empty()) return a11_;
    if (!cached_solver_ || active != cached_active_) {
      SparseMatrix m = system_.A11;
      for (int k : active) m.coeffRef(k, k) += system_.S1[k];
      cached_solver_ = std::make_unique<SpdSolver>(m, "A11 + S1 (active nodes)");
      cached_active_ = std::move(active);
    }
    return *cached_solver_;
  }

  const Mesh& mesh_;
  ProblemSpec spec_;
  const DofMap& dofs_;
  BlockSystem system_;
  SpdSolver a11_;
  SpdSolver a00_;
  EGFunction lift_;
  mutable std::vector<int> cached_active_;
  mutable std::unique_ptr<SpdSolver> cached_solver_;
};

/// Standard (unlimited) EG solution, including the Dirichlet lift.
inline EGFunction solve_standard_eg(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs) {
  spec.validate();
  const BlockSystem system = assemble_system(mesh, spec, dofs);
  const Vector x = SpdSolver(system.monolithic(), "monolithic A").solve(system.rhs());
  EGFunction u{dofs.extend_linear(x.head(dofs.num_linear())) + dirichlet_lift(mesh, spec.boundary).linear,
               x.tail(dofs.num_constant())};
  return u;
}

inline EGSolution solve_bound_preserving(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs) {
  return SplitSolver(mesh, spec, dofs).solve();
}

/// CSV "level,m,n,inner_increment,outer_increment,feasible", one row per inner step.
inline void write_trace_csv(std::ostream& out, const SolveTrace& trace, int level, bool header = true) {
  if (header) out << "level,m,n,inner_increment,outer_increment,feasible\n";
  for (int m = 0; m < trace.outer_iters; ++m) {
    const auto& inner = trace.inner_residual_histories[m];
    for (std::size_t n = 0; n < inner.size(); ++n) {
      out << level << ',' << m << ',' << n << ',' << format_double(inner[n]) << ','
          << format_double(trace.outer_increments[m]) << ',' << (trace.feasible_per_outer[m] ? 1 : 0) << '\n';
    }
  }
}

}  // namespace egbp

#endif  // EGBP_SOLVER_HPP
