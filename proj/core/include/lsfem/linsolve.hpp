#pragma once

#include <span>
#include <vector>

#include "lsfem/assembly.hpp"

namespace lsfem {

struct SolveReport {
  std::vector<double> solution;
  int iterations = 0;
  /// |b - A x| / |b| (0 for b = 0).
  double relative_residual = 0.0;
  bool converged = false;
  /// p^T A p <= 0 was met: the matrix is not positive definite.
  bool breakdown = false;
};

struct CgOptions {
  double tol = 1e-10;
  int max_iterations = 0;  ///< 0 picks 10 * size + 100
};

/// Jacobi-preconditioned conjugate gradients from x0 = 0. Throws InvalidArgument
/// for a non-square or asymmetric (relative 1e-12) matrix, or a nonpositive diagonal
/// entry, which is reported as breakdown instead.
SolveReport cg_solve(const SparseMatrix& a, std::span<const double> b, const CgOptions& opt = {});
SolveReport cg_solve(const LsSystem& sys, const CgOptions& opt = {});

inline constexpr int kDirectSolveLimit = 2000;

/// Dense LU with partial pivoting. Throws InvalidArgument above kDirectSolveLimit
/// unknowns and SingularMatrixError (with the pivot index) for a numerically zero pivot.
SolveReport direct_solve_small(const SparseMatrix& a, std::span<const double> b);
SolveReport direct_solve_small(const LsSystem& sys);

/// Power iteration on mu I - B with mu the largest Gershgorin row bound, from the
/// normalized all-ones vector; returns mu minus the Rayleigh quotient. Stops early
/// once the quotient changes by less than `rel_tol` relative to mu over 10 iterations.
double lambda_min_estimate(const SparseMatrix& a, int iters, double rel_tol = 0.0);
double lambda_min_estimate(const LsSystem& sys, int iters, double rel_tol = 0.0);

}  // namespace lsfem
