#include "lsfem/linsolve.hpp"

#include <cmath>
#include <numeric>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_square(const SparseMatrix& a, std::span<const double> b, const char* who) {
  if (a.rows() != a.cols()) throw InvalidArgument(std::string(who) + ": matrix is not square");
  if (static_cast<int>(b.size()) != a.rows()) throw InvalidArgument(std::string(who) + ": rhs size mismatch");
}

double residual_norm(const SparseMatrix& a, std::span<const double> x, std::span<const double> b) {
  const auto ax = a.multiply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (b[i] - ax[i]) * (b[i] - ax[i]);
  return std::sqrt(s);
}

}  // namespace

SolveReport cg_solve(const SparseMatrix& a, std::span<const double> b, const CgOptions& opt) {
  check_square(a, b, "cg_solve");
  if (a.symmetry_error() > 1e-12) throw InvalidArgument("cg_solve: matrix is not symmetric");
  const int n = a.rows();
  const int maxit = opt.max_iterations > 0 ? opt.max_iterations : 10 * n + 100;

  SolveReport rep;
  rep.solution.assign(idx(n), 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }
  auto diag = a.diagonal();
  for (double d : diag) {
    if (!(d > 0.0)) {
      rep.breakdown = true;
      rep.relative_residual = 1.0;
      return rep;
    }
  }
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(idx(n)), p(idx(n)), q(idx(n));
  for (int i = 0; i < n; ++i) z[idx(i)] = r[idx(i)] / diag[idx(i)];
  p = z;
  double rz = dot(r, z);
  std::vector<double>& x = rep.solution;
  for (int it = 1; it <= maxit; ++it) {
    a.multiply(p, q);
    const double curvature = dot(p, q);
    if (!(curvature > 0.0)) {
      rep.breakdown = true;
      rep.iterations = it;
      break;
    }
    const double alpha = rz / curvature;
    for (int i = 0; i < n; ++i) {
      x[idx(i)] += alpha * p[idx(i)];
      r[idx(i)] -= alpha * q[idx(i)];
    }
    rep.iterations = it;
    bool restart = false;
    if (norm2(r) <= opt.tol * bnorm) {
      // confirm with the true residual; the recurrence drifts slowly
      const double true_res = residual_norm(a, x, b);
      if (true_res <= opt.tol * bnorm) {
        rep.converged = true;
        break;
      }
      for (int i = 0; i < n; ++i) r[idx(i)] = b[idx(i)];
      const auto ax = a.multiply(x);
      for (int i = 0; i < n; ++i) r[idx(i)] -= ax[idx(i)];
      restart = true;
    }
    for (int i = 0; i < n; ++i) z[idx(i)] = r[idx(i)] / diag[idx(i)];
    const double rz_new = dot(r, z);
    const double beta = restart ? 0.0 : rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[idx(i)] = z[idx(i)] + beta * p[idx(i)];
  }
  rep.relative_residual = residual_norm(a, x, b) / bnorm;
  return rep;
}

SolveReport cg_solve(const LsSystem& sys, const CgOptions& opt) { return cg_solve(sys.matrix, sys.rhs, opt); }

SolveReport direct_solve_small(const SparseMatrix& a, std::span<const double> b) {
  check_square(a, b, "direct_solve_small");
  const int n = a.rows();
  if (n > kDirectSolveLimit) {
    throw InvalidArgument("direct_solve_small: " + std::to_string(n) + " unknowns exceed the limit of " +
                          std::to_string(kDirectSolveLimit));
  }
  std::vector<double> m = a.dense();
  std::vector<double> x(b.begin(), b.end());
  const double scale = std::max(a.max_abs(), 1e-300);
  auto at = [&](int i, int j) -> double& { return m[idx(i) * idx(n) + idx(j)]; };
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
    }
    if (std::abs(at(piv, k)) <= 1e-14 * scale) throw SingularMatrixError("direct_solve_small: singular matrix", idx(k));
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(at(k, j), at(piv, j));
      std::swap(x[idx(k)], x[idx(piv)]);
    }
    const double inv = 1.0 / at(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double l = at(i, k) * inv;
      if (l == 0.0) continue;
      at(i, k) = 0.0;
      for (int j = k + 1; j < n; ++j) at(i, j) -= l * at(k, j);
      x[idx(i)] -= l * x[idx(k)];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    double s = x[idx(k)];
    for (int j = k + 1; j < n; ++j) s -= at(k, j) * x[idx(j)];
    x[idx(k)] = s / at(k, k);
  }
  SolveReport rep;
  const double bnorm = norm2(b);
  rep.relative_residual = bnorm > 0.0 ? residual_norm(a, x, b) / bnorm : 0.0;
  rep.solution = std::move(x);
  rep.iterations = 1;
  rep.converged = true;
  return rep;
}

SolveReport direct_solve_small(const LsSystem& sys) { return direct_solve_small(sys.matrix, sys.rhs); }

double lambda_min_estimate(const SparseMatrix& a, int iters, double rel_tol) {
  if (a.rows() != a.cols()) throw InvalidArgument("lambda_min_estimate: matrix is not square");
  if (a.symmetry_error() > 1e-12) throw InvalidArgument("lambda_min_estimate: matrix is not symmetric");
  const int n = a.rows();
  if (n == 0) return 0.0;
  double mu = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int k = a.row_ptr()[idx(i)]; k < a.row_ptr()[idx(i) + 1]; ++k) row += std::abs(a.values()[idx(k)]);
    mu = std::max(mu, row);
  }
  std::vector<double> x(idx(n), 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(idx(n));
  double rq = 0.0;
  double rq_checkpoint = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iters; ++it) {
    a.multiply(x, y);
    // y = (mu I - A) x
    for (int i = 0; i < n; ++i) y[idx(i)] = mu * x[idx(i)] - y[idx(i)];
    rq = dot(x, y);
    const double ny = norm2(y);
    if (ny == 0.0) break;
    for (int i = 0; i < n; ++i) x[idx(i)] = y[idx(i)] / ny;
    if (rel_tol > 0.0 && it % 10 == 9) {
      if (std::abs(rq - rq_checkpoint) <= rel_tol * mu) break;
      rq_checkpoint = rq;
    }
  }
  return mu - rq;
}

double lambda_min_estimate(const LsSystem& sys, int iters, double rel_tol) {
  return lambda_min_estimate(sys.matrix, iters, rel_tol);
}

}  // namespace lsfem
