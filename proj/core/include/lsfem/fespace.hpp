#pragma once

// Finite element spaces on a Triangulation.
//
//  CR_D        Crouzeix-Raviart, midpoint dofs, zero on Dirichlet edges
//  RT0_N       lowest-order Raviart-Thomas, dof = flux through F along n_F,
//              zero normal flux on Neumann edges
//  RT0         RT0 without boundary constraints
//  N0_D        lowest-order Nedelec (first kind), dof = circulation along t_F,
//              zero tangential trace on Dirichlet edges
//  P0          piecewise constants
//  P1_D/P1_N   continuous P1 vanishing on the closed Dirichlet/Neumann boundary
//  P1_free     continuous P1 without constraints
//  P1_broken   discontinuous P1 (three vertex values per triangle)
//  P2_D        continuous P2 vanishing on the Dirichlet boundary
//  P1vec_Sigma continuous P1 2-vectors with n.sigma = 0 on Neumann edges and
//              t.sigma = 0 on Dirichlet edges; requires axis-aligned boundary edges

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lsfem/geometry.hpp"
#include "lsfem/mesh.hpp"

namespace lsfem {

enum class SpaceKind { CR_D, RT0_N, RT0, N0_D, P0, P1_D, P1_free, P1_N, P1_broken, P2_D, P1vec_Sigma };

std::string to_string(SpaceKind kind);
SpaceKind parse_space_kind(const std::string& name);
bool is_vector_space(SpaceKind kind);
int local_dof_count(SpaceKind kind);

/// Value of one basis function (or of a field) at a point. Scalar spaces fill
/// value/grad; vector spaces fill vec/div/curl, and jac (d vec_i / d x_j)
/// where the space is H1-conforming.
struct ShapeValue {
  double value = 0.0;
  Vec2 grad{};
  Vec2 vec{};
  double div = 0.0;
  double curl = 0.0;
  Mat2 jac{};

  ShapeValue& axpy(double a, const ShapeValue& s);
};

struct CellGeometry {
  std::array<Point, 3> p{};
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda{};
  std::array<double, 3> edge_length{};
  std::array<int, 3> sign{};

  Point map(const Bary& l) const { return l[0] * p[0] + l[1] * p[1] + l[2] * p[2]; }
};

CellGeometry cell_geometry(const Triangulation& m, int cell);

/// Evaluates every local basis function of `kind` on a cell; out.size() must be
/// local_dof_count(kind). Edge-oriented bases include the global orientation sign.
void eval_local_basis(SpaceKind kind, const CellGeometry& g, const Bary& lambda, std::span<ShapeValue> out);

class FeSpace {
 public:
  FeSpace(MeshPtr mesh, SpaceKind kind);

  SpaceKind kind() const { return kind_; }
  const Triangulation& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int dof_count() const { return dof_count_; }
  int local_count() const { return local_; }
  bool is_vector() const { return is_vector_space(kind_); }

  /// Global dof per local basis function; -1 marks an eliminated (constrained) one.
  std::span<const int> cell_dofs(int cell) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(cell * local_), static_cast<std::size_t>(local_)};
  }
  /// Orientation sign per local basis function (+1 for non-oriented spaces).
  std::span<const int> cell_signs(int cell) const {
    return {cell_signs_.data() + static_cast<std::size_t>(cell * local_), static_cast<std::size_t>(local_)};
  }

  /// Entity owning each global dof: an edge (CR, RT, N0, P2 edge dofs),
  /// a vertex (P1, P2 vertex dofs, P1vec), or a cell (P0, P1_broken).
  std::span<const int> dof_entity() const { return dof_entity_; }
  /// Vector component of each global dof for P1vec_Sigma; 0 otherwise.
  std::span<const int> dof_component() const { return dof_component_; }

 private:
  MeshPtr mesh_;
  SpaceKind kind_;
  int local_ = 0;
  int dof_count_ = 0;
  std::vector<int> cell_dofs_;
  std::vector<int> cell_signs_;
  std::vector<int> dof_entity_;
  std::vector<int> dof_component_;
};

using SpacePtr = std::shared_ptr<const FeSpace>;

SpacePtr build_space(MeshPtr mesh, SpaceKind kind);

/// A discrete function: coefficient vector over a space.
struct Field {
  SpacePtr space;
  std::vector<double> coeffs;

  Field() = default;
  explicit Field(SpacePtr s) : space(std::move(s)), coeffs(static_cast<std::size_t>(space->dof_count()), 0.0) {}
  Field(SpacePtr s, std::vector<double> c);
};

/// Exact pointwise evaluation of a field on cell K at barycentric points.
std::vector<ShapeValue> eval_field(const Field& f, int cell, std::span<const Bary> points);
ShapeValue eval_field(const Field& f, int cell, const Bary& point);

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Vec2(const Point&)>;
using MatrixFn = std::function<Mat2(const Point&)>;
/// Piecewise functions evaluated from a given cell (for discontinuous input).
using CellScalarFn = std::function<double(int cell, const Point&)>;
using CellVectorFn = std::function<Vec2(int cell, const Point&)>;

/// Canonical interpolants: CR edge means, P1/P2 point values, P0 cell means.
Field interpolate(const SpacePtr& space, const ScalarFn& g);
/// RT0 dof = flux along n_F, N0 dof = circulation along t_F, P1vec vertex values.
Field interpolate(const SpacePtr& space, const VectorFn& g);
Field interpolate_piecewise(const SpacePtr& space, const CellScalarFn& g);
Field interpolate_piecewise(const SpacePtr& space, const CellVectorFn& g);

}  // namespace lsfem
