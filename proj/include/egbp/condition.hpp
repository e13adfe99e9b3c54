#ifndef EGBP_CONDITION_HPP
#define EGBP_CONDITION_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "egbp/linear_solver.hpp"

namespace egbp {

enum class ConditionMethod { automatic, dense, lanczos };

struct LanczosResult {
  double eigenvalue = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Deterministic start vector in (0.5, 1.5)^n drawn from a fixed-seed engine.
/// The bits come straight from mt19937_64, whose output sequence is fixed by
/// the standard, so the vector is reproducible across platforms.
inline Vector lanczos_start(Eigen::Index n, std::uint64_t seed = 0x5eed) {
  std::mt19937_64 engine(seed);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 0.5 + static_cast<double>(engine() >> 11) * 0x1.0p-53;
  return v;
}

enum class Extreme { largest, largest_magnitude };

/// Extreme eigenvalue of a symmetric operator by Lanczos with full
/// reorthogonalization. Stops once the Ritz residual |beta_k y_k| falls below
/// rel_tol times the Ritz value.
inline LanczosResult lanczos(const std::function<Vector(const Vector&)>& apply, Eigen::Index n, Extreme which,
                             double rel_tol = 1e-10, int max_iterations = 500) {
  if (n <= 0) throw std::invalid_argument("lanczos: empty operator");
  const int cap = static_cast<int>(std::min<Eigen::Index>(n, max_iterations));
  std::vector<Vector> basis;
  std::vector<double> alpha, beta;
  Vector q = lanczos_start(n);
  q.normalize();
  LanczosResult result;
  for (int k = 0; k < cap; ++k) {
    basis.push_back(q);
    Vector w = apply(q);
    alpha.push_back(q.dot(w));
    // Two passes of classical Gram-Schmidt keep the basis orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& b : basis) w -= b.dot(w) * b;
    }
    const double next = w.norm();

    const int m = k + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(t);
    Eigen::Index pick = m - 1;
    if (which == Extreme::largest_magnitude && std::abs(ritz.eigenvalues()[0]) > std::abs(ritz.eigenvalues()[m - 1])) pick = 0;
    const double theta = ritz.eigenvalues()[pick];
    const double residual = std::abs(next * ritz.eigenvectors()(m - 1, pick));
    result.eigenvalue = theta;
    result.iterations = m;
    if (residual <= rel_tol * std::abs(theta) || next <= std::numeric_limits<double>::epsilon() * std::abs(theta) ||
        m == n) {
      result.converged = true;
      break;
    }
    beta.push_back(next);
    q = w / next;
  }
  return result;
}

inline LanczosResult lanczos_largest(const std::function<Vector(const Vector&)>& apply, Eigen::Index n,
                                     double rel_tol = 1e-10, int max_iterations = 500) {
  return lanczos(apply, n, Extreme::largest, rel_tol, max_iterations);
}

struct ConditionEstimate {
  double kappa = 0.0;    // max |lambda| / min |lambda|
  bool definite = true;  // all eigenvalues positive
};

/// Spectral condition number of a symmetric matrix, max |lambda| / min |lambda|.
/// Indefinite matrices are accepted and flagged; singular ones throw.
///
/// Dense symmetric eigendecomposition below dense_limit unknowns. Above it,
/// the extreme magnitudes come from Lanczos on A and on A^{-1}, the inverse
/// applied through a sparse LLT factor or, if that fails, a sparse LDLT factor.
inline ConditionEstimate spectral_condition(const SparseMatrix& a, ConditionMethod method = ConditionMethod::automatic,
                                            double rel_tol = 1e-10) {
  static constexpr Eigen::Index dense_limit = 2000;
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("condition_number: matrix must be square and nonempty");
  if (method == ConditionMethod::automatic) {
    method = a.rows() < dense_limit ? ConditionMethod::dense : ConditionMethod::lanczos;
  }
  const double singular_tol = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon();
  if (method == ConditionMethod::dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(a), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolverError("condition_number: eigendecomposition failed");
    const Vector magnitude = eig.eigenvalues().cwiseAbs();
    const double hi = magnitude.maxCoeff();
    const double lo = magnitude.minCoeff();
    if (!(hi > 0.0) || lo <= singular_tol * hi) throw SolverError("condition_number: matrix is singular");
    return {hi / lo, eig.eigenvalues()[0] > 0.0};
  }
  const LanczosResult top = lanczos([&](const Vector& x) { return Vector(a * x); }, a.rows(), Extreme::largest_magnitude, rel_tol);
  ConditionEstimate out;
  LanczosResult bottom;
  Eigen::SimplicialLLT<SparseMatrix> llt(a);
  if (llt.info() == Eigen::Success) {
    bottom = lanczos([&](const Vector& x) { return Vector(llt.solve(x)); }, a.rows(), Extreme::largest, rel_tol);
  } else {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw SolverError("condition_number: factorization failed");
    out.definite = false;
    bottom = lanczos([&](const Vector& x) { return Vector(ldlt.solve(x)); }, a.rows(), Extreme::largest_magnitude, rel_tol);
  }
  if (!top.converged || !bottom.converged) throw SolverError("condition_number: Lanczos did not converge");
  if (!(std::abs(top.eigenvalue) > 0.0) || !(std::abs(bottom.eigenvalue) > 0.0)) throw SolverError("condition_number: matrix is singular");
  out.kappa = std::abs(top.eigenvalue) * std::abs(bottom.eigenvalue);
  return out;
}

inline double condition_number(const SparseMatrix& a, ConditionMethod method = ConditionMethod::automatic,
                               double rel_tol = 1e-10) {
  return spectral_condition(a, method, rel_tol).kappa;
}

}  // namespace egbp

#endif  // EGBP_CONDITION_HPP
