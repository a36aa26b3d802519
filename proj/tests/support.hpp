#pragma once

// Shared helpers for the test binaries: seeded random fields and small meshes.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "lsfem/assembly.hpp"
#include "lsfem/mesh.hpp"

namespace lsfem::testing {

inline MeshPtr square(int n, SideSet dirichlet = SideSet::all()) {
  return std::make_shared<const Triangulation>(make_structured_square(n, dirichlet));
}

/// Unit square with every boundary edge Neumann.
inline MeshPtr neumann_square(int n) {
  const Triangulation m = make_structured_square(n);
  auto tags = m.boundary_tag_map();
  for (auto& [key, tag] : tags) tag = BoundaryTag::Neumann;
  return std::make_shared<const Triangulation>(m.vertices(), m.triangles(), tags);
}

inline MeshPtr lshape(int n) { return std::make_shared<const Triangulation>(make_lshape(n)); }

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline Field random_field(std::mt19937_64& rng, const SpacePtr& s) {
  return Field(s, random_vector(rng, static_cast<std::size_t>(s->dof_count())));
}

/// Random point strictly inside triangle t.
inline Point random_point(std::mt19937_64& rng, const Triangulation& m, int t) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double a = u(rng), b = u(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return m.map(t, {1.0 - a - b, a, b});
}

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

}  // namespace lsfem::testing
