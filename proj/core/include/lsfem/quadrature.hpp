#pragma once

#include <vector>

#include "lsfem/geometry.hpp"

namespace lsfem {

/// Symmetric Gauss rule on the reference triangle. Weights sum to 1/2, so a
/// physical integral over K is 2|K| * sum_q w_q g(x_q).
struct TriangleRule {
  int degree = 0;
  std::vector<Bary> points;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [0, 1]; weights sum to 1.
struct EdgeRule {
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;
};

/// degree in {1, 2, 4, 6}; otherwise InvalidArgument.
const TriangleRule& triangle_rule(int degree);

/// npoints in {2, 3}; otherwise InvalidArgument.
const EdgeRule& edge_rule(int npoints);

/// Library-wide quadrature degrees for assembly and error norms.
inline constexpr int kAssemblyDegree = 4;
inline constexpr int kErrorDegree = 6;

}  // namespace lsfem
