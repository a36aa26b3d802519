#pragma once

// Config-driven drivers behind the command-line tool: single solves,
// uniform convergence sweeps, adaptive runs, the counterexample study and
// the coercivity probe. Each driver returns its rows; *_table turns them
// into CSV.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lsfem/adapt.hpp"
#include "lsfem/assembly.hpp"
#include "lsfem/config.hpp"
#include "lsfem/estimators.hpp"
#include "lsfem/io.hpp"
#include "lsfem/linsolve.hpp"

namespace lsfem {

struct RunConfig {
  ProblemSpec problem;
  std::string problem_name;
  ProblemParams problem_params;
  Method method = Method::Div2;
  AssemblyOptions assembly;
  /// Initial cells per side (per unit length on the L-shape); unset picks a
  /// per-driver default.
  std::optional<int> n;
  std::optional<int> levels;
  double tol = 1e-10;
  unsigned seed = 1;

  double theta = 0.5;
  int max_dofs = 20000;
  std::string estimator;
  int max_iterations = 60;

  /// Counterexample edge; -1 picks the interior edge whose midpoint is closest
  /// to the domain center (lowest index on ties).
  int edge = -1;

  /// Convection strengths b = (beta, 0) swept by the probe; empty probes `problem` itself.
  std::vector<double> betas;
  int probe_iters = 20000;

  std::string out_dir = ".";
  bool vtk = false;
};

/// Reads [problem] [method] [mesh] [adapt] [output]; see the README for keys.
RunConfig make_run_config(const ConfigFile& cfg);

/// Unit square (with the problem's Dirichlet sides) or L-shape.
MeshPtr initial_mesh(const ProblemSpec& p, int n);

struct SolveResult {
  int n = 0;
  MeshStats stats;
  LsSystem system;
  SolveReport report;
  DiscreteFields fields;
  std::optional<ErrorReport> errors;
  EstimatorReport estimators;
  double functional = 0.0;  ///< least-squares functional with data (0 for galerkin-cr)
};

/// Assembles, solves with Jacobi CG at cfg.tol, and evaluates errors and estimators.
SolveResult solve_once(const ProblemSpec& p, Method m, const MeshPtr& mesh, const RunConfig& cfg);
CsvTable solve_table(const SolveResult& r, const RunConfig& cfg);

struct ConvergenceRow {
  int level = 0;
  int n = 0;
  double h_max = 0.0;
  int dofs = 0;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  /// Method norm: triple (div2), Y (divcurl3), H1 flux + potential (divcurl2),
  /// broken energy (galerkin-cr).
  double error = 0.0;
  double l2_error = 0.0;
  std::optional<double> rate;
  std::optional<double> rate_l2;
  std::map<std::string, double> estimators;
  std::map<std::string, double> effectivity;
};

std::string error_norm_name(Method m);

/// Levels n, 2n, 4n, ... (levels rows). Breakdowns are recorded and the sweep continues.
std::vector<ConvergenceRow> run_convergence(const RunConfig& cfg);
CsvTable convergence_table(const std::vector<ConvergenceRow>& rows, const RunConfig& cfg);

AdaptTrace run_adapt(const RunConfig& cfg);
CsvTable adapt_table(const AdaptTrace& trace);

struct CounterexampleResult {
  int edge = -1;
  std::vector<CounterexampleRow> rows;
  double decay = 1.0;  ///< ratio(L) / ratio(1)
  bool violated = false;
  std::string verdict;
};

/// Writes a warning to `diag` when the configured data are not A = I, b = 0, c = 0.
CounterexampleResult run_counterexample(const RunConfig& cfg, std::ostream& diag);
CsvTable counterexample_table(const CounterexampleResult& r);

struct ProbeRow {
  double beta = 0.0;
  int level = 0;
  int n = 0;
  double h_max = 0.0;
  int dofs = 0;
  /// Power-iteration estimate (slow to converge when the spectrum is wide).
  double lambda_min = 0.0;
  /// Dense smallest eigenvalue, only up to kDirectSolveLimit unknowns.
  std::optional<double> lambda_min_dense;
  bool breakdown = false;
  bool converged = false;
  /// Smallest generalized eigenvalue of the system against the Gram matrix of
  /// its natural norm (dense, only up to kDirectSolveLimit unknowns).
  std::optional<double> coercivity;
};

std::vector<ProbeRow> run_coercivity_probe(const RunConfig& cfg);
CsvTable probe_table(const std::vector<ProbeRow>& rows);
/// First level with lambda_min > 0 and no CG breakdown for the given beta; -1 if none.
int first_positive_level(const std::vector<ProbeRow>& rows, double beta);

/// Smallest eigenvalue of B x = lambda G x for symmetric B and SPD G (dense).
double generalized_lambda_min(const SparseMatrix& b, const SparseMatrix& g);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lsfem
