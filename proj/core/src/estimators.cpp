#include "lsfem/estimators.hpp"

#include <cmath>
#include <numeric>

#include "lsfem/errors.hpp"
#include "lsfem/linsolve.hpp"

namespace lsfem {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

void require_cr(const Field& f, const char* who) {
  if (!f.space || f.space->kind() != SpaceKind::CR_D) throw InvalidArgument(std::string(who) + ": expected a CR_D field");
}

// value of the CR field on cell t at its local vertex i
double cr_vertex_value(const Field& u, int t, int i) {
  const auto dofs = u.space->cell_dofs(t);
  double s = 0.0;
  for (int j = 0; j < 3; ++j) {
    const int d = dofs[idx(j)];
    if (d < 0) continue;
    s += (j == i ? -1.0 : 1.0) * u.coeffs[idx(d)];
  }
  return s;
}

Vec2 cr_gradient(const Field& u, int t) { return eval_field(u, t, Bary{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}).grad; }

// side values of u along edge e at parameter s in [0,1] from lo to hi
double cr_edge_value(const Field& u, int t, int e, double s) {
  const Triangulation& m = u.space->mesh();
  const auto& ed = m.edge(e);
  const Point x = (1.0 - s) * m.vertex(ed[0]) + s * m.vertex(ed[1]);
  return eval_field(u, t, m.barycentric(t, x)).value;
}

void spread(const Triangulation& m, int e, double value, std::vector<double>& out) {
  const auto& tris = m.edge_triangles(e);
  if (tris[1] < 0) {
    out[idx(tris[0])] += value;
  } else {
    out[idx(tris[0])] += 0.5 * value;
    out[idx(tris[1])] += 0.5 * value;
  }
}

}  // namespace

Field enrich_to_p2(const Field& u_cr) {
  require_cr(u_cr, "enrich_to_p2");
  const MeshPtr& mesh = u_cr.space->mesh_ptr();
  const Triangulation& m = *mesh;
  SpacePtr p2 = build_space(mesh, SpaceKind::P2_D);
  Field out(p2);

  std::vector<double> sum(idx(m.num_vertices()), 0.0);
  std::vector<int> count(idx(m.num_vertices()), 0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    for (int i = 0; i < 3; ++i) {
      const int v = m.triangle(t)[idx(i)];
      sum[idx(v)] += cr_vertex_value(u_cr, t, i);
      ++count[idx(v)];
    }
  }
  // P2_D numbering: free vertices in index order, then free edges
  int d = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.vertex_on_dirichlet(v)) continue;
    out.coeffs[idx(d++)] = sum[idx(v)] / count[idx(v)];
  }
  const auto entity = u_cr.space->dof_entity();
  std::vector<double> edge_value(idx(m.num_edges()), 0.0);
  for (int k = 0; k < u_cr.space->dof_count(); ++k) edge_value[idx(entity[idx(k)])] = u_cr.coeffs[idx(k)];
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.edge_tag(e) == BoundaryTag::Dirichlet) continue;
    out.coeffs[idx(d++)] = edge_value[idx(e)];
  }
  return out;
}

std::vector<double> jump_indicators(const Field& u_cr) {
  require_cr(u_cr, "jump_indicators");
  const Triangulation& m = u_cr.space->mesh();
  const EdgeRule& rule = edge_rule(2);
  std::vector<double> out(idx(m.num_triangles()), 0.0);
  for (int e = 0; e < m.num_edges(); ++e) {
    const BoundaryTag tag = m.edge_tag(e);
    if (tag == BoundaryTag::Neumann) continue;
    const auto& tris = m.edge_triangles(e);
    const double h = m.edge_length(e);
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      double jump = cr_edge_value(u_cr, tris[0], e, s);
      if (tag == BoundaryTag::Interior) jump -= cr_edge_value(u_cr, tris[1], e, s);
      integral += rule.weights[q] * h * jump * jump;
    }
    spread(m, e, integral / h, out);
  }
  return out;
}

std::vector<double> tangential_jump_indicators(const Field& u_cr) {
  require_cr(u_cr, "tangential_jump_indicators");
  const Triangulation& m = u_cr.space->mesh();
  std::vector<double> out(idx(m.num_triangles()), 0.0);
  for (int e = 0; e < m.num_edges(); ++e) {
    const BoundaryTag tag = m.edge_tag(e);
    if (tag == BoundaryTag::Neumann) continue;
    const auto& tris = m.edge_triangles(e);
    const Vec2 t = m.edge_tangent(e);
    double jump = dot(cr_gradient(u_cr, tris[0]), t);
    if (tag == BoundaryTag::Interior) jump -= dot(cr_gradient(u_cr, tris[1]), t);
    const double h = m.edge_length(e);
    // the jump of a piecewise constant gradient is constant on F
    spread(m, e, h * h * jump * jump, out);
  }
  return out;
}

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

void finish(EstimatorReport& rep, std::optional<double> true_error) {
  for (const auto& [name, local] : rep.local) {
    rep.global[name] = std::sqrt(std::max(0.0, sum(local)));
    if (true_error && *true_error > 0.0) rep.effectivity[name] = rep.global[name] / *true_error;
  }
}

}  // namespace

EstimatorReport estimate_div2(const DiscreteFields& sol, const ProblemSpec& p, const std::vector<int>& which,
                              std::optional<double> true_error) {
  require_cr(sol.u, "estimate_div2");
  if (!sol.sigma.space) throw InvalidArgument("estimate_div2: missing flux field");
  std::vector<bool> want(7, which.empty());
  for (int i : which) {
    if (i < 1 || i > 6) throw InvalidArgument("estimate_div2: estimator index " + std::to_string(i) + " not in 1..6");
    want[idx(i)] = true;
  }
  const bool need_uc = want[1] || want[2] || want[3] || want[5];
  const bool need_energy = want[1] || want[2];
  const bool need_jcr = want[2] || want[4] || want[6];
  const bool need_jump = want[3] || want[4];
  const bool need_tjump = want[5] || want[6];
  const MeshPtr& mesh = sol.u.space->mesh_ptr();

  std::vector<double> j_c, j_cr, energy, jump, tjump;
  if (need_uc) {
    const Field u_c = enrich_to_p2(sol.u);
    functional_value(Method::Div2, DiscreteFields{sol.sigma, u_c, {}}, p, true, {}, &j_c);
    if (need_energy) {
      // |A^1/2 grad_h(u_cr - u_c)|^2 per cell
      const DiscreteFields cr{{}, sol.u, {}};
      const DiscreteFields c{{}, u_c, {}};
      const SlotFn diff = slots_difference(field_slots(cr), field_slots(c));
      const TriangleRule& rule = triangle_rule(kAssemblyDegree);
      energy.assign(idx(mesh->num_triangles()), 0.0);
      for (int t = 0; t < mesh->num_triangles(); ++t) {
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const Bary& l = rule.points[q];
          const Point x = mesh->map(t, l);
          const Vec2 g = diff(t, l, x).grad_v;
          energy[idx(t)] += 2.0 * mesh->area(t) * rule.weights[q] * bilinear(g, p.A(x), g);
        }
      }
    }
  }
  if (need_jcr) functional_value(Method::Div2, DiscreteFields{sol.sigma, sol.u, {}}, p, true, {}, &j_cr);
  if (need_jump) jump = jump_indicators(sol.u);
  if (need_tjump) tjump = tangential_jump_indicators(sol.u);

  EstimatorReport rep;
  if (want[1]) rep.local["eta1"] = add(energy, j_c);
  if (want[2]) rep.local["eta2"] = add(energy, j_cr);
  if (want[3]) rep.local["eta3"] = add(jump, j_c);
  if (want[4]) rep.local["eta4"] = add(jump, j_cr);
  if (want[5]) rep.local["eta5"] = add(tjump, j_c);
  if (want[6]) rep.local["eta6"] = add(tjump, j_cr);
  finish(rep, true_error);
  return rep;
}

EstimatorReport estimate_divcurl(Method m, const DiscreteFields& sol, const ProblemSpec& p,
                                 std::optional<double> true_error) {
  if (m != Method::DivCurl3 && m != Method::DivCurl2) {
    throw InvalidArgument("estimate_divcurl: method must be divcurl3 or divcurl2");
  }
  if (m == Method::DivCurl3 && (!sol.phi.space || sol.phi.space->kind() != SpaceKind::N0_D)) {
    throw InvalidArgument("estimate_divcurl: divcurl3 needs an N0_D intensity field");
  }
  if (m == Method::DivCurl2 && (!sol.sigma.space || sol.sigma.space->kind() != SpaceKind::P1vec_Sigma)) {
    throw InvalidArgument("estimate_divcurl: divcurl2 needs a P1vec_Sigma flux field");
  }
  EstimatorReport rep;
  std::vector<double> local;
  functional_value(m, sol, p, true, {}, &local);
  rep.local[m == Method::DivCurl3 ? "zeta" : "xi"] = std::move(local);
  finish(rep, true_error);
  return rep;
}

// ---------------------------------------------------------------------------
// counterexample

namespace {

// P1 stiffness system on `space` with right-hand side sum_K |K| g_K . R grad lambda_i,
// R the identity or the ccw rotation
SolveReport solve_p1_projection(const SpacePtr& space, const std::vector<Vec2>& g, bool rotated) {
  const Triangulation& m = space->mesh();
  std::vector<Triplet> trip;
  std::vector<double> rhs(idx(space->dof_count()), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto gl = m.grad_barycentric(t);
    const double area = m.area(t);
    const auto dofs = space->cell_dofs(t);
    for (int i = 0; i < 3; ++i) {
      if (dofs[idx(i)] < 0) continue;
      const Vec2 test = rotated ? rotate_ccw(gl[idx(i)]) : gl[idx(i)];
      rhs[idx(dofs[idx(i)])] += area * dot(g[idx(t)], test);
      for (int j = 0; j < 3; ++j) {
        if (dofs[idx(j)] >= 0) trip.push_back({dofs[idx(i)], dofs[idx(j)], area * dot(gl[idx(i)], gl[idx(j)])});
      }
    }
  }
  const SparseMatrix a = SparseMatrix::from_triplets(space->dof_count(), space->dof_count(), std::move(trip));
  CgOptions opt;
  opt.tol = 1e-12;
  SolveReport rep = cg_solve(a, rhs, opt);
  if (!rep.converged) throw std::runtime_error("counterexample: P1 projection did not converge");
  return rep;
}

std::vector<double> vertex_values(const FeSpace& s, const std::vector<double>& coeffs) {
  std::vector<double> out(idx(s.mesh().num_vertices()), 0.0);
  const auto entity = s.dof_entity();
  for (int d = 0; d < s.dof_count(); ++d) out[idx(entity[idx(d)])] = coeffs[idx(d)];
  return out;
}

}  // namespace

std::vector<CounterexampleRow> counterexample_ratio(const MeshPtr& coarse, int edge, int levels) {
  if (!coarse) throw InvalidArgument("counterexample: null mesh");
  if (edge < 0 || edge >= coarse->num_edges()) throw InvalidArgument("counterexample: edge index out of range");
  if (coarse->edge_tag(edge) != BoundaryTag::Interior) {
    throw InvalidArgument("counterexample: edge " + std::to_string(edge) + " is not an interior edge");
  }
  if (levels < 1) throw InvalidArgument("counterexample: need at least one level");

  SpacePtr cr = build_space(coarse, SpaceKind::CR_D);
  Field w(cr);
  const auto entity = cr->dof_entity();
  for (int d = 0; d < cr->dof_count(); ++d) {
    if (entity[idx(d)] == edge) w.coeffs[idx(d)] = 1.0;
  }
  std::vector<Vec2> coarse_grad(idx(coarse->num_triangles()));
  for (int t = 0; t < coarse->num_triangles(); ++t) coarse_grad[idx(t)] = cr_gradient(w, t);

  // the functional only sees residuals, so any A = I problem works with f dropped
  ProblemSpec unit = builtin_problem("poisson-sine");

  std::vector<CounterexampleRow> rows;
  Triangulation current = *coarse;
  std::vector<int> ancestor(idx(coarse->num_triangles()));
  std::iota(ancestor.begin(), ancestor.end(), 0);
  for (int level = 1; level <= levels; ++level) {
    Triangulation next = refine_uniform(current);
    std::vector<int> anc(idx(next.num_triangles()));
    for (int t = 0; t < next.num_triangles(); ++t) anc[idx(t)] = ancestor[idx(next.parent(t))];
    ancestor = std::move(anc);
    current = std::move(next);
    auto fine = std::make_shared<const Triangulation>(current);

    std::vector<Vec2> g(idx(fine->num_triangles()));
    for (int t = 0; t < fine->num_triangles(); ++t) g[idx(t)] = coarse_grad[idx(ancestor[idx(t)])];

    SpacePtr p1d = build_space(fine, SpaceKind::P1_D);
    SpacePtr p1n = build_space(fine, SpaceKind::P1_N);
    const auto alpha = vertex_values(*p1d, solve_p1_projection(p1d, g, false).solution);
    const auto beta = vertex_values(*p1n, solve_p1_projection(p1n, g, true).solution);

    // tau = -curl beta: flux through F along n_F equals beta(hi) - beta(lo)
    SpacePtr rt = build_space(fine, SpaceKind::RT0);
    Field tau(rt);
    const auto rt_edges = rt->dof_entity();
    for (int d = 0; d < rt->dof_count(); ++d) {
      const auto& ed = fine->edge(rt_edges[idx(d)]);
      tau.coeffs[idx(d)] = beta[idx(ed[1])] - beta[idx(ed[0])];
    }
    // v = w - alpha as a broken P1 field
    SpacePtr broken = build_space(fine, SpaceKind::P1_broken);
    Field v(broken);
    for (int t = 0; t < fine->num_triangles(); ++t) {
      const int k = ancestor[idx(t)];
      for (int i = 0; i < 3; ++i) {
        const int vert = fine->triangle(t)[idx(i)];
        const double wv = eval_field(w, k, coarse->barycentric(k, fine->vertex(vert))).value;
        v.coeffs[idx(3 * t + i)] = wv - alpha[idx(vert)];
      }
    }

    const DiscreteFields f{tau, v, {}};
    CounterexampleRow row;
    row.level = level;
    row.h_max = mesh_stats(*fine).h_max;
    row.j_div = functional_value(Method::Div2, f, unit, false);
    row.triple_norm_sq = triple_norm_sq(f);
    row.ratio = row.j_div / row.triple_norm_sq;
    double div_sq = 0.0;
    for (int t = 0; t < fine->num_triangles(); ++t) {
      const double dv = eval_field(tau, t, Bary{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}).div;
      div_sq += fine->area(t) * dv * dv;
    }
    row.div_tau = std::sqrt(div_sq);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lsfem
