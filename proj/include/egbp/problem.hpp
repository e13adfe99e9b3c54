#ifndef EGBP_PROBLEM_HPP
#define EGBP_PROBLEM_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include "egbp/fespace.hpp"

namespace egbp {

/// Invariant interval [lower, upper] the limited solution must respect.
struct Bounds {
  double lower = 0.0;
  double upper = 1.0;

  bool contains(double value, double tol = 0.0) const { return value >= lower - tol && value <= upper + tol; }
};

/// Facet penalty weight: gamma (eps + mu h_F^2) / h_F^beta, or the plain
/// diffusion-only weight gamma eps / h_F^beta.
enum class PenaltyWeight { reaction_diffusion, diffusion_only };

/// How (f, v) is integrated: the six-point rule for smooth data, or the
/// element-centroid value for data that is piecewise constant on the mesh.
enum class SourceQuadrature { dunavant, centroid };

/// Left-hand operator of the inner Richardson step. `a_h` uses A11 alone;
/// `active_set` adds the s_h diagonal on the nodes truncated at the current
/// iterate. Both share the same fixed point.
enum class InnerOperator { a_h, active_set };

/// Coefficients, data and algorithm parameters of
///   -eps Laplace(u) + mu u = f in the domain, u = u_D on the boundary.
struct ProblemSpec {
  double epsilon = 1.0;
  double mu = 1.0;
  double gamma = 10.0;
  int beta = 4;
  double alpha = 1.0;
  double omega = 0.5;
  Bounds bounds{};
  ScalarField source = [](Point) { return 0.0; };
  ScalarField boundary = [](Point) { return 0.0; };
  SourceQuadrature source_quadrature = SourceQuadrature::dunavant;
  PenaltyWeight penalty_weight = PenaltyWeight::reaction_diffusion;
  double tol_inner = 1e-9;
  double tol_outer = 1e-12;
  int max_inner = 1000;
  int max_outer = 100;
  // Literal variants: the inner residual without the constant coupling, and
  // step 2 driven by the untruncated previous linear part.
  bool paper_verbatim_inner = false;
  bool paper_verbatim_outer = false;
  InnerOperator inner_operator = InnerOperator::active_set;

  /// gamma (eps + mu h_F^2) / h_F^beta.
  double facet_penalty(double h_facet) const {
    const double weight = penalty_weight == PenaltyWeight::reaction_diffusion ? epsilon + mu * h_facet * h_facet : epsilon;
    return gamma * weight / std::pow(h_facet, beta);
  }

  void validate() const {
    const auto fail = [](const std::string& what) { throw std::invalid_argument("problem: " + what); };
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (!(mu > 0.0)) fail("mu must be positive");
    if (!(gamma > 0.0)) fail("gamma must be positive");
    if (beta < 1) fail("beta must be an integer >= 1");
    if (!(alpha >= 0.0)) fail("alpha must be non-negative");
    if (!(omega > 0.0 && omega <= 1.0)) fail("omega must lie in (0, 1]");
    if (!(bounds.lower <= bounds.upper)) fail("bounds must satisfy lower <= upper");
    if (!(tol_inner > 0.0) || !(tol_outer > 0.0)) fail("tolerances must be positive");
    if (max_inner < 1 || max_outer < 1) fail("iteration caps must be positive");
    if (!source || !boundary) fail("source and boundary data must be set");
  }
};

}  // namespace egbp

#endif  // EGBP_PROBLEM_HPP
