#ifndef EGBP_LINEAR_SOLVER_HPP
#define EGBP_LINEAR_SOLVER_HPP

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "egbp/assembly.hpp"

namespace egbp {

/// A linear solve failed: factorization breakdown, negative curvature, or no
/// convergence. The message names the offending block.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LinearSolverKind { automatic, dense_cholesky, sparse_cholesky, conjugate_gradient };

/// Factor-once, solve-many wrapper for symmetric positive definite systems.
///
/// `automatic` uses a dense Cholesky factorization below dense_limit unknowns
/// and a sparse Cholesky factorization (AMD ordering) above. Direct solves are
/// followed by up to three steps of iterative refinement towards rel_tol.
class SpdSolver {
 public:
  static constexpr int dense_limit = 3000;

  SpdSolver(const SparseMatrix& a, std::string block, LinearSolverKind kind = LinearSolverKind::automatic,
            double rel_tol = 1e-12)
      : a_(a), block_(std::move(block)), kind_(kind), rel_tol_(rel_tol) {
    if (a_.rows() != a_.cols()) throw SolverError(block_ + ": matrix is not square");
    if (kind_ == LinearSolverKind::automatic) {
      kind_ = a_.rows() < dense_limit ? LinearSolverKind::dense_cholesky : LinearSolverKind::sparse_cholesky;
    }
    if (a_.rows() == 0) return;
    switch (kind_) {
      case LinearSolverKind::dense_cholesky:
        dense_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(Eigen::MatrixXd(a_));
        if (dense_->info() != Eigen::Success) throw SolverError(block_ + ": dense Cholesky factorization failed (matrix not SPD)");
        break;
      case LinearSolverKind::sparse_cholesky:
        sparse_ = std::make_unique<SparseCholesky>(a_);
        if (sparse_->info() != Eigen::Success) throw SolverError(block_ + ": sparse Cholesky factorization failed (matrix not SPD)");
        break;
      case LinearSolverKind::conjugate_gradient:
        inverse_diagonal_ = a_.diagonal();
        for (Eigen::Index i = 0; i < inverse_diagonal_.size(); ++i) {
          if (!(inverse_diagonal_[i] > 0.0)) throw SolverError(block_ + ": non-positive diagonal entry (matrix not SPD)");
          inverse_diagonal_[i] = 1.0 / inverse_diagonal_[i];
        }
        break;
      case LinearSolverKind::automatic:
        break;
    }
  }

  LinearSolverKind kind() const { return kind_; }
  Eigen::Index size() const { return a_.rows(); }
  const SparseMatrix& matrix() const { return a_; }

  Vector solve(const Vector& b) const {
    if (b.size() != a_.rows()) throw SolverError(block_ + ": right-hand side has the wrong size");
    if (a_.rows() == 0) return Vector(0);
    const double b_norm = b.norm();
    if (b_norm == 0.0) return Vector::Zero(b.size());
    if (kind_ == LinearSolverKind::conjugate_gradient) return conjugate_gradient(b, b_norm);
    Vector x = direct(b);
    for (int step = 0; step < 3; ++step) {
      const Vector r = b - a_ * x;
      if (r.norm() <= rel_tol_ * b_norm) break;
      x += direct(r);
    }
    if (!x.allFinite()) throw SolverError(block_ + ": solution is not finite");
    return x;
  }

 private:
  using SparseCholesky = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

  Vector direct(const Vector& b) const {
    if (dense_) return dense_->solve(b);
    return sparse_->solve(b);
  }

  Vector conjugate_gradient(const Vector& b, double b_norm) const {
    Vector x = Vector::Zero(b.size());
    Vector r = b;
    Vector z = inverse_diagonal_.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    const int max_iterations = 10 * static_cast<int>(b.size()) + 100;
    for (int it = 0; it < max_iterations; ++it) {
      const Vector ap = a_ * p;
      const double curvature = p.dot(ap);
      if (!(curvature > 0.0)) throw SolverError(block_ + ": conjugate gradients met non-positive curvature (matrix not SPD)");
      const double step = rz / curvature;
      x += step * p;
      r -= step * ap;
      if (r.norm() <= rel_tol_ * b_norm) return x;
      z = inverse_diagonal_.cwiseProduct(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    throw SolverError(block_ + ": conjugate gradients did not converge");
  }

  SparseMatrix a_;
  std::string block_;
  LinearSolverKind kind_;
  double rel_tol_;
  std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> dense_;
  std::unique_ptr<SparseCholesky> sparse_;
  Vector inverse_diagonal_;
};

/// One-shot SPD solve.
inline Vector solve_spd(const SparseMatrix& a, const Vector& b, double rel_tol = 1e-12, const std::string& block = "A",
                        LinearSolverKind kind = LinearSolverKind::automatic) {
  return SpdSolver(a, block, kind, rel_tol).solve(b);
}

}  // namespace egbp

#endif  // EGBP_LINEAR_SOLVER_HPP
