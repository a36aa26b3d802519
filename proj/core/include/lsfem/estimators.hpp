#pragma once

// A posteriori estimators for the least-squares methods.
//
//  eta1^2 = |A^1/2 grad_h(u_cr - u_c)|^2   + J(sigma, u_c)
//  eta2^2 = |A^1/2 grad_h(u_cr - u_c)|^2   + J(sigma, u_cr)
//  eta3^2 = sum_F 1/h_F |[u_cr]|_F^2        + J(sigma, u_c)
//  eta4^2 = sum_F 1/h_F |[u_cr]|_F^2        + J(sigma, u_cr)
//  eta5^2 = sum_F h_F |[grad_h u_cr . t_F]|_F^2 + J(sigma, u_c)
//  eta6^2 = sum_F h_F |[grad_h u_cr . t_F]|_F^2 + J(sigma, u_cr)
//
// with u_c = E_h u_cr the P2 enrichment and J the two-field functional with data.
// Jumps are v- - v+ on interior edges, the trace on Dirichlet edges and zero on
// Neumann edges. zeta^2 is the three-field functional, xi^2 the restricted
// two-field one.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsfem/assembly.hpp"

namespace lsfem {

struct EstimatorReport {
  /// Estimator values (not squared), keyed "eta1".."eta6", "zeta", "xi".
  std::map<std::string, double> global;
  /// Squared per-triangle contributions; they sum to global^2.
  std::map<std::string, std::vector<double>> local;
  /// global / true error, when a true error was supplied.
  std::map<std::string, double> effectivity;
};

/// Vertex values: averages of the adjacent CR traces (zero on Dirichlet vertices);
/// edge midpoints: the CR value (zero on Dirichlet edges).
Field enrich_to_p2(const Field& u_cr);

/// Edge jump terms of a CR field, split per triangle (half to each side of an
/// interior edge). Returned squared.
std::vector<double> jump_indicators(const Field& u_cr);
std::vector<double> tangential_jump_indicators(const Field& u_cr);

/// `which` lists estimator numbers in 1..6 (empty means all).
EstimatorReport estimate_div2(const DiscreteFields& sol, const ProblemSpec& p, const std::vector<int>& which = {},
                              std::optional<double> true_error = std::nullopt);

/// zeta for divcurl3, xi for divcurl2.
EstimatorReport estimate_divcurl(Method m, const DiscreteFields& sol, const ProblemSpec& p,
                                 std::optional<double> true_error = std::nullopt);

struct CounterexampleRow {
  int level = 0;
  double h_max = 0.0;
  double j_div = 0.0;
  double triple_norm_sq = 0.0;
  double ratio = 0.0;
  double div_tau = 0.0;  ///< |div tau_l|, zero up to round-off
};

/// Discrete Helmholtz witness that the two-field functional is not uniformly
/// coercive on RT0 x broken fields: w is the CR basis function of interior edge
/// `edge` on `coarse`; level l uses l uniform refinements. A = I, b = 0, c = 0.
std::vector<CounterexampleRow> counterexample_ratio(const MeshPtr& coarse, int edge, int levels);

}  // namespace lsfem
