#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsfem/assembly.hpp"
#include "lsfem/linsolve.hpp"

namespace lsfem {

/// Greedy bulk marking: triangles by descending indicator (ties by lower index)
/// until their sum reaches theta * total. Never empty for a nonempty mesh.
/// Throws InvalidArgument for theta outside [0, 1] or negative indicators.
std::vector<int> dorfler_mark(std::span<const double> local, double theta);

struct AdaptRecord {
  int iteration = 0;
  int dofs = 0;
  int triangles = 0;
  double estimator = 0.0;
  std::optional<double> true_error;
  double marked_fraction = 0.0;  ///< marked triangles / triangles
  double h_min = 0.0;
  double h_max = 0.0;
  bool converged = true;
  bool breakdown = false;
};

struct AdaptTrace {
  std::string estimator;
  std::vector<AdaptRecord> records;
  /// The loop stopped on a solver breakdown (last record shows it).
  bool aborted = false;
  /// Mesh of the last iteration.
  MeshPtr final_mesh;
};

struct AdaptOptions {
  double theta = 0.5;
  int max_dofs = 20000;
  /// "" picks eta4 for div2, zeta for divcurl3, xi for divcurl2.
  std::string estimator;
  CgOptions cg{1e-10, 0};
  /// Safety stop independent of max_dofs.
  int max_iterations = 60;
};

/// Default estimator name for an adaptive method.
std::string default_estimator(Method m);

/// solve -> estimate -> mark -> bisect until the dof count reaches max_dofs.
/// The true error is the triple norm (div2) or Y norm (divcurl3) when exact data exist.
AdaptTrace adapt_loop(const ProblemSpec& p, Method m, const MeshPtr& initial, const AdaptOptions& opt = {});

}  // namespace lsfem
