#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "egbp/analysis.hpp"
#include "egbp/condition.hpp"
#include "egbp/solver.hpp"
#include "egbp/study.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace egbp;

namespace {

std::vector<oracle::P> raw_vertices(const Mesh& m) {
  std::vector<oracle::P> out;
  for (int v = 0; v < static_cast<int>(m.num_vertices()); ++v) out.push_back({m.vertex(v).x, m.vertex(v).y});
  return out;
}

std::vector<std::array<int, 3>> raw_triangles(const Mesh& m) { return {m.triangles().begin(), m.triangles().end()}; }

// Value of the EG function on triangle t at p, rebuilt from hat functions.
double oracle_value(const std::vector<oracle::P>& verts, const std::array<int, 3>& tri, const EGFunction& f, int t,
                    oracle::P p) {
  const std::array<oracle::P, 3> corners{verts[tri[0]], verts[tri[1]], verts[tri[2]]};
  double value = f.constant[t];
  for (int k = 0; k < 3; ++k) value += f.linear[tri[k]] * oracle::affine(oracle::hat_coefficients(corners, k), p);
  return value;
}

EGFunction random_function(const Mesh& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  EGFunction f = EGFunction::zero(m);
  for (auto* v : {&f.linear, &f.constant}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = u(rng);
  }
  return f;
}

}  // namespace

TEST(ErrorNorms, ExactForInterpolatedLinears) {
  const Mesh m = build_structured(3, 2, Rect{-1, 0, 1, 1});
  const auto g = [](Point p) { return 1.5 - 2 * p.x + 0.5 * p.y; };
  const EGFunction f = interpolate_lagrange(m, g);
  EXPECT_LE(error_l2(m, g, f), 1e-14);
  EXPECT_LE(error_h1_linear(m, [](Point) { return Point{-2.0, 0.5}; }, f), 1e-13);
}

TEST(ErrorNorms, MatchSubdividedQuadrature) {
  const Mesh m = build_structured(4, 3, Rect{0, 0, 2, 1});
  const auto verts = raw_vertices(m);
  const auto tris = raw_triangles(m);
  std::mt19937_64 rng(3);
  const auto exact = [](Point p) { return p.x * p.x - p.y; };
  for (int trial = 0; trial < 5; ++trial) {
    const EGFunction f = random_function(m, rng);
    double l2 = 0.0, h1 = 0.0;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      const std::array<oracle::P, 3> c{verts[tris[t][0]], verts[tris[t][1]], verts[tris[t][2]]};
      l2 += oracle::integrate_triangle(c, [&](oracle::P p) {
        const double e = exact({p.x, p.y}) - oracle_value(verts, tris[t], f, t, p);
        return e * e;
      }, 5);
      double gx = 0.0, gy = 0.0;
      for (int k = 0; k < 3; ++k) {
        const auto h = oracle::hat_coefficients(c, k);
        gx += f.linear[tris[t][k]] * h[0];
        gy += f.linear[tris[t][k]] * h[1];
      }
      h1 += oracle::integrate_triangle(c, [&](oracle::P p) {
        const double ex = 2 * p.x - gx, ey = -1.0 - gy;
        return ex * ex + ey * ey;
      });
    }
    // The quartic integrand limits the subdivided midpoint rule to about 1e-10.
    EXPECT_NEAR(error_l2(m, exact, f), std::sqrt(l2), 1e-9 * std::sqrt(l2));
    EXPECT_NEAR(error_h1_linear(m, [](Point p) { return Point{2 * p.x, -1.0}; }, f), std::sqrt(h1), 1e-12 * std::sqrt(h1));
  }
}

TEST(ErrorNorms, MismatchedFunctionThrows) {
  const Mesh a = build_structured(2, 2, Rect{}), b = build_structured(3, 2, Rect{});
  EXPECT_THROW(error_l2(a, [](Point) { return 0.0; }, EGFunction::zero(b)), std::invalid_argument);
}

TEST(JumpNorm, TwoElementExample) {
  const Mesh m = build_structured(1, 1, Rect{});
  ProblemSpec s;
  s.epsilon = 1.0;
  s.mu = 0.0;
  // Weight eps / h times length: 1 on the diagonal and on each unit boundary side.
  const Vector v0 = (Vector(2) << 1.0, 0.0).finished();
  EXPECT_NEAR(jump_norm(m, s, v0), std::sqrt(3.0), 1e-14);
  EGFunction f = EGFunction::zero(m);
  f.constant = v0;
  EXPECT_NEAR(jump_norm(m, s, f), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(jump_norm(m, s, f, FacetSet::interior), 1.0, 1e-14);
  EXPECT_NEAR(jump_norm(m, s, f, FacetSet::boundary), std::sqrt(2.0), 1e-14);
}

TEST(JumpNorm, GlobalConstantSeesOnlyTheBoundary) {
  const Mesh m = build_structured(4, 4, Rect{});
  ProblemSpec s;
  const double c = 0.7;
  double expected = 0.0;
  for (const auto& f : m.facets()) {
    if (f.is_boundary()) expected += (s.epsilon + s.mu * f.length * f.length) * c * c;
  }
  EXPECT_NEAR(jump_norm(m, s, Vector::Constant(m.num_elements(), c)), std::sqrt(expected), 1e-14);
}

TEST(JumpNorm, MatchesSegmentQuadrature) {
  const Mesh m = build_structured(3, 3, Rect{0, 0, 1.5, 1});
  const auto verts = raw_vertices(m);
  const auto tris = raw_triangles(m);
  ProblemSpec s;
  s.epsilon = 0.3;
  s.mu = 2.0;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const EGFunction f = random_function(m, rng);
    double sum = 0.0;
    for (const auto& e : oracle::edges(tris)) {
      const oracle::P a = verts[e.a], b = verts[e.b];
      const double h = std::hypot(b.x - a.x, b.y - a.y);
      sum += (s.epsilon + s.mu * h * h) / h * oracle::integrate_segment(a, b, [&](oracle::P p) {
        double jump = oracle_value(verts, tris[e.owners[0]], f, e.owners[0], p);
        if (e.owners.size() == 2) jump -= oracle_value(verts, tris[e.owners[1]], f, e.owners[1], p);
        return jump * jump;
      });
    }
    EXPECT_NEAR(jump_norm(m, s, f), std::sqrt(sum), 1e-12 * std::sqrt(sum));
  }
}

TEST(JumpNorm, ContinuousFunctionsHaveNoInteriorJump) {
  const auto outcome = props::continuous_jump_suite(1000, 505);
  EXPECT_TRUE(outcome.passed()) << outcome.summary();
}

TEST(Eoc, Examples) {
  EXPECT_DOUBLE_EQ(eoc(4.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(eoc(1.0, 1.0), 0.0);
  EXPECT_TRUE(std::isnan(eoc(0.0, 1.0)));
  EXPECT_TRUE(std::isnan(eoc(1.0, -1.0)));
  EXPECT_TRUE(std::isnan(eoc(std::numeric_limits<double>::quiet_NaN(), 1.0)));
  EXPECT_TRUE(std::isnan(eoc(std::numeric_limits<double>::infinity(), 1.0)));
}

TEST(FittedRate, PowerLaws) {
  const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> decay, growth;
  for (double x : h) {
    decay.push_back(3.0 * x * x);
    growth.push_back(7.0 / (x * x * x));
  }
  EXPECT_NEAR(fitted_rate(h, decay), 2.0, 1e-12);
  EXPECT_NEAR(fitted_rate(h, growth, 2), -3.0, 1e-12);
  EXPECT_TRUE(std::isnan(fitted_rate({0.5}, {1.0})));
  EXPECT_THROW(fitted_rate(h, {1.0}), std::invalid_argument);
}

TEST(ComparisonBound, Examples) {
  auto check = [](Bounds b, double lo, double hi) {
    EXPECT_EQ(b.lower, lo);
    EXPECT_EQ(b.upper, hi);
  };
  check(comparison_bound(1.0, 0.0, 1.0, true), 0.0, 1.0);
  check(comparison_bound(0.0, 0.0, 1.0, true), 0.0, 0.0);
  check(comparison_bound(4.0, 0.0, 2.0, true), 0.0, 2.0);
  check(comparison_bound(1.0, 3.0, 1.0, false), -3.0, 3.0);
  EXPECT_THROW(comparison_bound(1.0, 0.0, 0.0, true), std::invalid_argument);

  const Mesh m = build_structured(12, 12, Rect{});
  ProblemSpec s;
  s.source = layer_case::source;
  check(comparison_bound(m, s), 0.0, 1.0);
  s.boundary = [](Point p) { return -p.x; };
  check(comparison_bound(m, s), -1.0, 1.0);
}

TEST(ConditionNumber, Examples) {
  const SparseMatrix id = Eigen::MatrixXd::Identity(4, 4).sparseView();
  EXPECT_NEAR(condition_number(id), 1.0, 1e-14);
  const SparseMatrix d = Eigen::MatrixXd(Eigen::Vector2d(1, 9).asDiagonal()).sparseView();
  EXPECT_NEAR(condition_number(d), 9.0, 1e-13);
  const SparseMatrix indefinite = Eigen::MatrixXd(Eigen::Vector2d(-1, 2).asDiagonal()).sparseView();
  const ConditionEstimate e = spectral_condition(indefinite);
  EXPECT_NEAR(e.kappa, 2.0, 1e-14);
  EXPECT_FALSE(e.definite);
  const SparseMatrix singular = Eigen::MatrixXd(Eigen::Vector2d(0, 1).asDiagonal()).sparseView();
  EXPECT_THROW(condition_number(singular), SolverError);
}

TEST(ConditionNumber, LanczosAgreesWithDense) {
  const Mesh m = build_structured(24, 24, Rect{});
  const DofMap dofs(m);
  const BlockSystem sys = assemble_system(m, ProblemSpec{}, dofs);
  for (const SparseMatrix* a : {&sys.A11, &sys.A00}) {
    const double dense = condition_number(*a, ConditionMethod::dense);
    const double lanczos = condition_number(*a, ConditionMethod::lanczos);
    EXPECT_NEAR(lanczos, dense, 1e-6 * dense);
  }
  // Indefinite diagonal: eigenvalues -1, 2, ..., 300.
  Vector diag(300);
  diag[0] = -1.0;
  for (int i = 1; i < 300; ++i) diag[i] = i + 1.0;
  const SparseMatrix a = Eigen::MatrixXd(diag.asDiagonal()).sparseView();
  const ConditionEstimate e = spectral_condition(a, ConditionMethod::lanczos);
  EXPECT_FALSE(e.definite);
  EXPECT_NEAR(e.kappa, 300.0, 1e-6);
}

TEST(ConditionNumber, StiffnessGrowsLikeInverseSquareMeshSize) {
  std::vector<double> h, kappa;
  for (int n : {4, 8, 16, 32}) {
    const Mesh m = build_structured(n, n, Rect{});
    const DofMap dofs(m);
    h.push_back(1.0 / n);
    kappa.push_back(condition_number(assemble_system(m, ProblemSpec{}, dofs).A11));
  }
  EXPECT_NEAR(fitted_rate(h, kappa), -2.0, 0.2);
}

TEST(Conservation, ResidualOfTheLinearSolve) {
  const Mesh m = build_structured(6, 6, Rect{});
  const DofMap dofs(m);
  ProblemSpec s;
  EXPECT_TRUE(conservation_report(assemble_system(m, s, dofs), dofs, EGFunction::zero(m)).isZero());
  s.source = layer_case::source;
  const BlockSystem sys = assemble_system(m, s, dofs);
  const EGFunction u = solve_standard_eg(m, s, dofs);
  const Vector r = conservation_report(sys, dofs, u);
  EXPECT_EQ(r.size(), static_cast<Eigen::Index>(m.num_elements()));
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-12 * sys.rhs().norm());
  // A perturbed constant shows up on its own element row through A00.
  EGFunction bumped = u;
  bumped.constant[3] += 1e-3;
  const Vector rb = conservation_report(sys, dofs, bumped);
  EXPECT_NEAR(rb[3] - r[3], -1e-3 * sys.A00.coeff(3, 3), 1e-15);
}

TEST(BoundViolation, Examples) {
  const Mesh m = build_structured(2, 2, Rect{});
  const BoundViolation zero = bound_violation(m, EGFunction::zero(m), Bounds{0, 1});
  EXPECT_EQ(zero.min_val, 0.0);
  EXPECT_EQ(zero.max_val, 0.0);
  EXPECT_EQ(zero.violation_count, 0);
  EGFunction f = EGFunction::zero(m);
  f.constant[0] = -0.5;
  f.constant[1] = 1.25;
  const BoundViolation v = bound_violation(m, f, Bounds{0, 1});
  EXPECT_EQ(v.min_val, -0.5);
  EXPECT_EQ(v.max_val, 1.25);
  EXPECT_EQ(v.violation_count, 6);
  EXPECT_EQ(bound_violation(m, f, Bounds{0, 1}, 0.5).violation_count, 0);
}

TEST(Poincare, BrokenConstantBoundedUnderRefinement) {
  std::vector<double> constants;
  const auto outcome = props::poincare_suite(1000, 606, &constants);
  EXPECT_TRUE(outcome.passed()) << outcome.summary();
  ASSERT_GE(constants.size(), 2u);
  for (double c : constants) EXPECT_GT(c, 0.0);
}
