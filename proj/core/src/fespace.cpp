#include "lsfem/fespace.hpp"

#include <cmath>

#include "lsfem/errors.hpp"
#include "lsfem/quadrature.hpp"

namespace lsfem {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

bool edge_kept(SpaceKind kind, BoundaryTag tag) {
  switch (kind) {
    case SpaceKind::CR_D:
    case SpaceKind::N0_D:
      return tag != BoundaryTag::Dirichlet;
    case SpaceKind::RT0_N:
      return tag != BoundaryTag::Neumann;
    default:
      return true;
  }
}

bool vertex_kept(SpaceKind kind, const Triangulation& m, int v) {
  switch (kind) {
    case SpaceKind::P1_D:
    case SpaceKind::P2_D:
      return !m.vertex_on_dirichlet(v);
    case SpaceKind::P1_N:
      return !m.vertex_on_neumann(v);
    default:
      return true;
  }
}

bool is_edge_space(SpaceKind k) {
  return k == SpaceKind::CR_D || k == SpaceKind::RT0_N || k == SpaceKind::RT0 || k == SpaceKind::N0_D;
}

bool is_vertex_space(SpaceKind k) {
  return k == SpaceKind::P1_D || k == SpaceKind::P1_free || k == SpaceKind::P1_N;
}

}  // namespace

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::CR_D: return "CR_D";
    case SpaceKind::RT0_N: return "RT0_N";
    case SpaceKind::RT0: return "RT0";
    case SpaceKind::N0_D: return "N0_D";
    case SpaceKind::P0: return "P0";
    case SpaceKind::P1_D: return "P1_D";
    case SpaceKind::P1_free: return "P1_free";
    case SpaceKind::P1_N: return "P1_N";
    case SpaceKind::P1_broken: return "P1_broken";
    case SpaceKind::P2_D: return "P2_D";
    case SpaceKind::P1vec_Sigma: return "P1vec_Sigma";
  }
  return "?";
}

SpaceKind parse_space_kind(const std::string& name) {
  for (SpaceKind k : {SpaceKind::CR_D, SpaceKind::RT0_N, SpaceKind::RT0, SpaceKind::N0_D, SpaceKind::P0,
                      SpaceKind::P1_D, SpaceKind::P1_free, SpaceKind::P1_N, SpaceKind::P1_broken, SpaceKind::P2_D,
                      SpaceKind::P1vec_Sigma}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown space kind '" + name + "'");
}

bool is_vector_space(SpaceKind kind) {
  return kind == SpaceKind::RT0_N || kind == SpaceKind::RT0 || kind == SpaceKind::N0_D ||
         kind == SpaceKind::P1vec_Sigma;
}

int local_dof_count(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::P0:
      return 1;
    case SpaceKind::P2_D:
    case SpaceKind::P1vec_Sigma:
      return 6;
    default:
      return 3;
  }
}

ShapeValue& ShapeValue::axpy(double a, const ShapeValue& s) {
  value += a * s.value;
  grad += a * s.grad;
  vec += a * s.vec;
  div += a * s.div;
  curl += a * s.curl;
  jac += a * s.jac;
  return *this;
}

CellGeometry cell_geometry(const Triangulation& m, int cell) {
  CellGeometry g;
  const Triangle& tri = m.triangle(cell);
  for (int i = 0; i < 3; ++i) {
    g.p[idx(i)] = m.vertex(tri[idx(i)]);
    g.sign[idx(i)] = m.edge_sign(cell, i);
    g.edge_length[idx(i)] = m.edge_length(m.triangle_edge(cell, i));
  }
  g.area = m.area(cell);
  g.grad_lambda = m.grad_barycentric(cell);
  return g;
}

void eval_local_basis(SpaceKind kind, const CellGeometry& g, const Bary& l, std::span<ShapeValue> out) {
  if (static_cast<int>(out.size()) != local_dof_count(kind)) throw InvalidArgument("eval_local_basis: wrong span size");
  for (auto& s : out) s = ShapeValue{};
  const Point x = g.map(l);
  switch (kind) {
    case SpaceKind::CR_D:
      for (int i = 0; i < 3; ++i) {
        out[idx(i)].value = 1.0 - 2.0 * l[idx(i)];
        out[idx(i)].grad = -2.0 * g.grad_lambda[idx(i)];
      }
      break;
    case SpaceKind::RT0_N:
    case SpaceKind::RT0:
      for (int i = 0; i < 3; ++i) {
        const double c = g.sign[idx(i)] / (2.0 * g.area);
        out[idx(i)].vec = c * (x - g.p[idx(i)]);
        out[idx(i)].div = 2.0 * c;
        out[idx(i)].jac = Mat2::scalar(c);
      }
      break;
    case SpaceKind::N0_D:
      for (int i = 0; i < 3; ++i) {
        const double c = g.sign[idx(i)] / (2.0 * g.area);
        out[idx(i)].vec = c * rotate_ccw(x - g.p[idx(i)]);
        out[idx(i)].curl = 2.0 * c;
        out[idx(i)].jac = {0.0, -c, c, 0.0};
      }
      break;
    case SpaceKind::P0:
      out[0].value = 1.0;
      break;
    case SpaceKind::P1_D:
    case SpaceKind::P1_free:
    case SpaceKind::P1_N:
    case SpaceKind::P1_broken:
      for (int i = 0; i < 3; ++i) {
        out[idx(i)].value = l[idx(i)];
        out[idx(i)].grad = g.grad_lambda[idx(i)];
      }
      break;
    case SpaceKind::P2_D:
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        out[idx(i)].value = l[idx(i)] * (2.0 * l[idx(i)] - 1.0);
        out[idx(i)].grad = (4.0 * l[idx(i)] - 1.0) * g.grad_lambda[idx(i)];
        out[idx(3 + i)].value = 4.0 * l[idx(j)] * l[idx(k)];
        out[idx(3 + i)].grad = 4.0 * (l[idx(j)] * g.grad_lambda[idx(k)] + l[idx(k)] * g.grad_lambda[idx(j)]);
      }
      break;
    case SpaceKind::P1vec_Sigma:
      for (int i = 0; i < 3; ++i) {
        const Vec2& gl = g.grad_lambda[idx(i)];
        ShapeValue& sx = out[idx(2 * i)];
        sx.vec = {l[idx(i)], 0.0};
        sx.jac = {gl.x, gl.y, 0.0, 0.0};
        sx.div = gl.x;
        sx.curl = -gl.y;
        ShapeValue& sy = out[idx(2 * i + 1)];
        sy.vec = {0.0, l[idx(i)]};
        sy.jac = {0.0, 0.0, gl.x, gl.y};
        sy.div = gl.y;
        sy.curl = gl.x;
      }
      break;
  }
}

FeSpace::FeSpace(MeshPtr mesh, SpaceKind kind) : mesh_(std::move(mesh)), kind_(kind), local_(local_dof_count(kind)) {
  if (!mesh_) throw InvalidArgument("build_space: null mesh");
  const Triangulation& m = *mesh_;
  const int nt = m.num_triangles();
  cell_dofs_.assign(idx(nt * local_), -1);
  cell_signs_.assign(idx(nt * local_), 1);

  if (is_edge_space(kind)) {
    std::vector<int> number(idx(m.num_edges()), -1);
    for (int e = 0; e < m.num_edges(); ++e) {
      if (!edge_kept(kind, m.edge_tag(e))) continue;
      number[idx(e)] = dof_count_++;
      dof_entity_.push_back(e);
    }
    const bool oriented = kind != SpaceKind::CR_D;
    for (int t = 0; t < nt; ++t) {
      for (int i = 0; i < 3; ++i) {
        cell_dofs_[idx(t * 3 + i)] = number[idx(m.triangle_edge(t, i))];
        if (oriented) cell_signs_[idx(t * 3 + i)] = m.edge_sign(t, i);
      }
    }
  } else if (is_vertex_space(kind)) {
    std::vector<int> number(idx(m.num_vertices()), -1);
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (!vertex_kept(kind, m, v)) continue;
      number[idx(v)] = dof_count_++;
      dof_entity_.push_back(v);
    }
    for (int t = 0; t < nt; ++t) {
      for (int i = 0; i < 3; ++i) cell_dofs_[idx(t * 3 + i)] = number[idx(m.triangle(t)[idx(i)])];
    }
  } else if (kind == SpaceKind::P0 || kind == SpaceKind::P1_broken) {
    for (int t = 0; t < nt; ++t) {
      for (int i = 0; i < local_; ++i) {
        cell_dofs_[idx(t * local_ + i)] = dof_count_++;
        dof_entity_.push_back(t);
      }
    }
  } else if (kind == SpaceKind::P2_D) {
    std::vector<int> vnum(idx(m.num_vertices()), -1);
    std::vector<int> enumber(idx(m.num_edges()), -1);
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (!vertex_kept(kind, m, v)) continue;
      vnum[idx(v)] = dof_count_++;
      dof_entity_.push_back(v);
    }
    for (int e = 0; e < m.num_edges(); ++e) {
      if (m.edge_tag(e) == BoundaryTag::Dirichlet) continue;
      enumber[idx(e)] = dof_count_++;
      dof_entity_.push_back(e);
    }
    for (int t = 0; t < nt; ++t) {
      for (int i = 0; i < 3; ++i) {
        cell_dofs_[idx(t * 6 + i)] = vnum[idx(m.triangle(t)[idx(i)])];
        cell_dofs_[idx(t * 6 + 3 + i)] = enumber[idx(m.triangle_edge(t, i))];
      }
    }
  } else if (kind == SpaceKind::P1vec_Sigma) {
    // per-vertex component constraints from axis-aligned boundary edges
    std::vector<std::array<bool, 2>> fixed(idx(m.num_vertices()), {false, false});
    for (int e = 0; e < m.num_edges(); ++e) {
      const BoundaryTag tag = m.edge_tag(e);
      if (tag == BoundaryTag::Interior) continue;
      const Vec2 t = m.edge_tangent(e);
      int normal_comp;
      if (std::abs(t.x) < 1e-12) {
        normal_comp = 0;
      } else if (std::abs(t.y) < 1e-12) {
        normal_comp = 1;
      } else {
        throw RestrictionError(
            "P1vec_Sigma: boundary edge " + std::to_string(e) +
            " is not axis-aligned; tangential/normal constraints on a vector P1 flux space are only "
            "supported for axis-aligned boundaries");
      }
      const int comp = tag == BoundaryTag::Neumann ? normal_comp : 1 - normal_comp;
      for (int v : m.edge(e)) fixed[idx(v)][idx(comp)] = true;
    }
    std::vector<std::array<int, 2>> number(idx(m.num_vertices()), {-1, -1});
    for (int v = 0; v < m.num_vertices(); ++v) {
      for (int c = 0; c < 2; ++c) {
        if (fixed[idx(v)][idx(c)]) continue;
        number[idx(v)][idx(c)] = dof_count_++;
        dof_entity_.push_back(v);
        dof_component_.push_back(c);
      }
    }
    for (int t = 0; t < nt; ++t) {
      for (int i = 0; i < 3; ++i) {
        const int v = m.triangle(t)[idx(i)];
        cell_dofs_[idx(t * 6 + 2 * i)] = number[idx(v)][0];
        cell_dofs_[idx(t * 6 + 2 * i + 1)] = number[idx(v)][1];
      }
    }
  }
  if (dof_component_.empty()) dof_component_.assign(idx(dof_count_), 0);
}

SpacePtr build_space(MeshPtr mesh, SpaceKind kind) { return std::make_shared<const FeSpace>(std::move(mesh), kind); }

Field::Field(SpacePtr s, std::vector<double> c) : space(std::move(s)), coeffs(std::move(c)) {
  if (static_cast<int>(coeffs.size()) != space->dof_count()) throw InvalidArgument("Field: coefficient count mismatch");
}

ShapeValue eval_field(const Field& f, int cell, const Bary& point) {
  const FeSpace& s = *f.space;
  if (cell < 0 || cell >= s.mesh().num_triangles()) throw InvalidArgument("eval_field: cell index out of range");
  const CellGeometry g = cell_geometry(s.mesh(), cell);
  std::array<ShapeValue, 6> basis;
  std::span<ShapeValue> local(basis.data(), idx(s.local_count()));
  eval_local_basis(s.kind(), g, point, local);
  const auto dofs = s.cell_dofs(cell);
  ShapeValue out;
  for (int i = 0; i < s.local_count(); ++i) {
    const int d = dofs[idx(i)];
    if (d >= 0) out.axpy(f.coeffs[idx(d)], local[idx(i)]);
  }
  return out;
}

std::vector<ShapeValue> eval_field(const Field& f, int cell, std::span<const Bary> points) {
  std::vector<ShapeValue> out;
  out.reserve(points.size());
  for (const Bary& b : points) out.push_back(eval_field(f, cell, b));
  return out;
}

namespace {

// edge mean / flux / circulation of a piecewise function, evaluated from K-
template <class Fn>
double edge_integral(const Triangulation& m, int e, Fn&& integrand) {
  const auto& rule = edge_rule(3);
  const auto& ed = m.edge(e);
  const Point a = m.vertex(ed[0]);
  const Point b = m.vertex(ed[1]);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double t = rule.points[q];
    sum += rule.weights[q] * integrand((1.0 - t) * a + t * b);
  }
  return sum * m.edge_length(e);
}

std::vector<int> vertex_owner(const Triangulation& m) {
  std::vector<int> owner(idx(m.num_vertices()), -1);
  for (int t = 0; t < m.num_triangles(); ++t) {
    for (int v : m.triangle(t)) {
      if (owner[idx(v)] < 0) owner[idx(v)] = t;
    }
  }
  return owner;
}

}  // namespace

Field interpolate_piecewise(const SpacePtr& space, const CellScalarFn& g) {
  const FeSpace& s = *space;
  const Triangulation& m = s.mesh();
  if (s.is_vector()) throw InvalidArgument("interpolate: scalar function given for vector space " + to_string(s.kind()));
  Field f(space);
  const auto entity = s.dof_entity();
  switch (s.kind()) {
    case SpaceKind::CR_D:
      for (int d = 0; d < s.dof_count(); ++d) {
        const int e = entity[idx(d)];
        const int k = m.edge_triangles(e)[0];
        f.coeffs[idx(d)] = edge_integral(m, e, [&](const Point& x) { return g(k, x); }) / m.edge_length(e);
      }
      break;
    case SpaceKind::P1_D:
    case SpaceKind::P1_free:
    case SpaceKind::P1_N: {
      const auto owner = vertex_owner(m);
      for (int d = 0; d < s.dof_count(); ++d) {
        const int v = entity[idx(d)];
        f.coeffs[idx(d)] = g(owner[idx(v)], m.vertex(v));
      }
      break;
    }
    case SpaceKind::P1_broken:
      for (int t = 0; t < m.num_triangles(); ++t) {
        for (int i = 0; i < 3; ++i) f.coeffs[idx(3 * t + i)] = g(t, m.vertex(m.triangle(t)[idx(i)]));
      }
      break;
    case SpaceKind::P0: {
      const auto& rule = triangle_rule(kAssemblyDegree);
      for (int t = 0; t < m.num_triangles(); ++t) {
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) sum += 2.0 * rule.weights[q] * g(t, m.map(t, rule.points[q]));
        f.coeffs[idx(t)] = sum;
      }
      break;
    }
    case SpaceKind::P2_D: {
      const auto owner = vertex_owner(m);
      // vertex dofs first, then edge dofs (see FeSpace constructor)
      int d = 0;
      for (int v = 0; v < m.num_vertices(); ++v) {
        if (m.vertex_on_dirichlet(v)) continue;
        f.coeffs[idx(d++)] = g(owner[idx(v)], m.vertex(v));
      }
      for (int e = 0; e < m.num_edges(); ++e) {
        if (m.edge_tag(e) == BoundaryTag::Dirichlet) continue;
        f.coeffs[idx(d++)] = g(m.edge_triangles(e)[0], m.edge_midpoint(e));
      }
      break;
    }
    default:
      throw InvalidArgument("interpolate: unsupported space");
  }
  return f;
}

Field interpolate_piecewise(const SpacePtr& space, const CellVectorFn& g) {
  const FeSpace& s = *space;
  const Triangulation& m = s.mesh();
  if (!s.is_vector()) throw InvalidArgument("interpolate: vector function given for scalar space " + to_string(s.kind()));
  Field f(space);
  const auto entity = s.dof_entity();
  switch (s.kind()) {
    case SpaceKind::RT0_N:
    case SpaceKind::RT0:
      for (int d = 0; d < s.dof_count(); ++d) {
        const int e = entity[idx(d)];
        const int k = m.edge_triangles(e)[0];
        const Vec2 n = m.edge_normal(e);
        f.coeffs[idx(d)] = edge_integral(m, e, [&](const Point& x) { return dot(g(k, x), n); });
      }
      break;
    case SpaceKind::N0_D:
      for (int d = 0; d < s.dof_count(); ++d) {
        const int e = entity[idx(d)];
        const int k = m.edge_triangles(e)[0];
        const Vec2 t = m.edge_tangent(e);
        f.coeffs[idx(d)] = edge_integral(m, e, [&](const Point& x) { return dot(g(k, x), t); });
      }
      break;
    case SpaceKind::P1vec_Sigma: {
      const auto owner = vertex_owner(m);
      const auto comp = s.dof_component();
      for (int d = 0; d < s.dof_count(); ++d) {
        const int v = entity[idx(d)];
        const Vec2 val = g(owner[idx(v)], m.vertex(v));
        f.coeffs[idx(d)] = comp[idx(d)] == 0 ? val.x : val.y;
      }
      break;
    }
    default:
      throw InvalidArgument("interpolate: unsupported space");
  }
  return f;
}

Field interpolate(const SpacePtr& space, const ScalarFn& g) {
  return interpolate_piecewise(space, CellScalarFn([&g](int, const Point& x) { return g(x); }));
}

Field interpolate(const SpacePtr& space, const VectorFn& g) {
  return interpolate_piecewise(space, CellVectorFn([&g](int, const Point& x) { return g(x); }));
}

}  // namespace lsfem
