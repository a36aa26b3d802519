#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lsfem/assembly.hpp"
#include "lsfem/errors.hpp"
#include "lsfem/linsolve.hpp"
#include "support.hpp"

using namespace lsfem;
using lsfem::testing::random_field;
using lsfem::testing::rel_diff;
using lsfem::testing::square;

namespace {

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

DiscreteFields interpolate_exact(const LsSystem& sys, const ProblemSpec& p) {
  DiscreteFields f;
  f.sigma = interpolate(sys.spaces[0], p.exact->sigma);
  f.u = interpolate(sys.spaces[1], p.exact->u);
  if (sys.spaces.size() > 2) {
    const VectorFn g = p.exact->grad_u;
    f.phi = interpolate(sys.spaces[2], VectorFn([g](const Point& x) { return -g(x); }));
  }
  return f;
}

DiscreteFields random_fields(std::mt19937_64& rng, const LsSystem& sys) {
  DiscreteFields f;
  f.sigma = random_field(rng, sys.spaces[0]);
  if (sys.spaces.size() > 1) f.u = random_field(rng, sys.spaces[1]);
  if (sys.spaces.size() > 2) f.phi = random_field(rng, sys.spaces[2]);
  return f;
}

ProblemSpec zero_data(ProblemSpec p) {
  p.f = [](const Point&) { return 0.0; };
  p.exact.reset();
  return p;
}

// element loop with the edge-midpoint rule (exact for quadratics), separate
// from the library quadrature tables
template <class F>
double midpoint_integral(const Triangulation& m, F&& g) {
  double s = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Bary mids[3] = {{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}};
    for (const Bary& l : mids) s += m.area(t) / 3.0 * g(t, l);
  }
  return s;
}

}  // namespace

TEST(AssembleDiv2, SymmetricWithPositiveDiagonal) {
  const std::vector<std::pair<MeshPtr, std::string>> cases = {{square(1), "poisson-sine"},
                                                               {square(4), "jump-diffusion"},
                                                               {square(5, {Side::Left}), "linear-x"},
                                                               {lsfem::testing::lshape(2), "lshape-singular"}};
  for (const auto& [m, name] : cases) {
    const LsSystem sys = assemble(Method::Div2, m, builtin_problem(name));
    EXPECT_EQ(sys.matrix.symmetry_error(), 0.0) << name;
    for (double d : sys.matrix.diagonal()) EXPECT_GT(d, 0.0);
    EXPECT_EQ(sys.block("sigma").begin, 0);
    EXPECT_EQ(sys.block("u").end, sys.size());
  }
}

TEST(AssembleDiv2, SingleTriangleAgainstElementOracle) {
  std::unordered_map<EdgeKey, BoundaryTag> tags = {
      {edge_key(0, 1), BoundaryTag::Dirichlet}, {edge_key(1, 2), BoundaryTag::Dirichlet}, {edge_key(0, 2), BoundaryTag::Dirichlet}};
  const auto mesh = std::make_shared<const Triangulation>(std::vector<Point>{{0.1, 0.2}, {1.3, 0.4}, {0.5, 1.1}},
                                                          std::vector<Triangle>{{0, 1, 2}}, tags);
  const SpacePtr rt = build_space(mesh, SpaceKind::RT0_N);
  const SpacePtr cr = build_space(mesh, SpaceKind::CR_D);
  ASSERT_EQ(rt->dof_count(), 3);
  ASSERT_EQ(cr->dof_count(), 0);
  const LsSystem sys = assemble_div2(rt, cr, builtin_problem("poisson-sine"));
  const Triangulation& m = *mesh;
  const double area = m.area(0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int si = m.edge_sign(0, i), sj = m.edge_sign(0, j);
      const Point pi = m.vertex(m.triangle(0)[sz(i)]), pj = m.vertex(m.triangle(0)[sz(j)]);
      // phi_k = s_k / (2|K|) (x - p_k), div phi_k = s_k / |K|
      const double mass = midpoint_integral(m, [&](int, const Bary& l) {
        const Point x = m.map(0, l);
        return dot(x - pi, x - pj);
      }) * si * sj / (4 * area * area);
      const double div = si * sj / area;
      const int di = rt->cell_dofs(0)[sz(i)], dj = rt->cell_dofs(0)[sz(j)];
      EXPECT_NEAR(sys.matrix.at(di, dj), mass + div, 1e-12 * (std::abs(mass + div) + 1.0)) << i << "," << j;
    }
  }
}

TEST(AssembleDiv2, InterpolatedExactFunctionalDecaysLikeHSquared) {
  const ProblemSpec p = builtin_problem("poisson-sine");
  std::vector<double> j;
  for (int n : {8, 16, 32}) {
    const LsSystem sys = assemble(Method::Div2, square(n), p);
    const double v = functional_value(Method::Div2, interpolate_exact(sys, p), p, true);
    EXPECT_GT(v, 0.0);
    j.push_back(v);
  }
  for (std::size_t i = 1; i < j.size(); ++i) EXPECT_NEAR(std::log2(j[i - 1] / j[i]), 2.0, 0.3);
}

TEST(AssembleDiv2, HomogeneousFunctionalIsQuadraticForm) {
  std::mt19937_64 rng(1);
  for (Method m : {Method::Div2, Method::DivCurl3, Method::DivCurl2}) {
    const ProblemSpec p = builtin_problem("convection", {{"beta1", 2.0}, {"beta2", 1.0}});
    const LsSystem sys = assemble(m, square(4), p);
    for (int trial = 0; trial < 5; ++trial) {
      const DiscreteFields f = random_fields(rng, sys);
      const std::vector<double> x = join_fields(sys, f);
      EXPECT_LE(rel_diff(functional_value(m, f, p, false), quadratic_form(sys, x)), 1e-12) << to_string(m);
    }
  }
}

TEST(AssembleDiv2, FunctionalWithDataMatchesExpansion) {
  // J(x; f) = x'Bx - 2 x'F + J(0; f)
  std::mt19937_64 rng(4);
  const ProblemSpec p = builtin_problem("helmholtz-indefinite");
  const LsSystem sys = assemble(Method::Div2, square(3), p);
  const DiscreteFields f = random_fields(rng, sys);
  const std::vector<double> x = join_fields(sys, f);
  DiscreteFields zero;
  zero.sigma = Field(sys.spaces[0]);
  zero.u = Field(sys.spaces[1]);
  double xf = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) xf += x[i] * sys.rhs[i];
  const double expect = quadratic_form(sys, x) - 2.0 * xf + functional_value(Method::Div2, zero, p, true);
  EXPECT_LE(rel_diff(functional_value(Method::Div2, f, p, true), expect), 1e-11);
}

TEST(AssembleDiv2, ErrorEquationOrthogonality) {
  for (const std::string& name : {"poisson-sine", "convection", "helmholtz-indefinite"}) {
    const ProblemSpec p = builtin_problem(name);
    for (int n : {4, 8}) {
      AssemblyOptions opt;
      opt.quad_degree = kErrorDegree;
      const LsSystem sys = assemble(Method::Div2, square(n), p, opt);
      const SolveReport r = direct_solve_small(sys);
      const DiscreteFields f = split_solution(sys, r.solution);
      const SlotFn err = slots_difference(exact_slots(*p.exact), field_slots(f));
      const std::vector<double> b = form_action(sys, p, err, kErrorDegree);
      double scale = 0.0;
      for (double v : sys.rhs) scale = std::max(scale, std::abs(v));
      for (double v : b) EXPECT_LE(std::abs(v), 1e-9 * scale) << name << " n=" << n;
    }
  }
}

TEST(AssembleDivCurl3, SpdOnEveryMeshIncludingCoarsest) {
  const ProblemSpec p = builtin_problem("poisson-sine");
  for (int n : {1, 2, 4, 8, 16}) {
    const LsSystem sys = assemble(Method::DivCurl3, square(n), p);
    EXPECT_EQ(sys.matrix.symmetry_error(), 0.0);
    const SolveReport r = cg_solve(sys);
    EXPECT_TRUE(r.converged) << n;
    EXPECT_FALSE(r.breakdown) << n;
  }
}

TEST(AssembleDivCurl3, CurlOfInterpolatedGradientVanishes) {
  // zero up to the edge quadrature of the circulation dofs
  const ProblemSpec p = builtin_problem("poisson-sine");
  std::vector<double> c;
  for (int n : {2, 4, 8, 16}) {
    const LsSystem sys = assemble(Method::DivCurl3, square(n), p);
    const DiscreteFields f = interpolate_exact(sys, p);
    const double curl_sq = midpoint_integral(*sys.spaces[0]->mesh_ptr(), [&](int t, const Bary& l) {
      const double c = eval_field(f.phi, t, l).curl;
      return c * c;
    });
    c.push_back(std::sqrt(curl_sq));
  }
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LT(c[i], c[i - 1] / 16.0);
  EXPECT_LT(c.back(), 1e-6);
}

TEST(AssembleDivCurl3, ZeroDataGivesZeroSolution) {
  const ProblemSpec p = zero_data(builtin_problem("poisson-sine"));
  for (Method m : {Method::Div2, Method::DivCurl3, Method::DivCurl2}) {
    const LsSystem sys = assemble(m, square(4), p);
    for (double v : sys.rhs) EXPECT_EQ(v, 0.0);
    const SolveReport r = cg_solve(sys);
    for (double v : r.solution) EXPECT_EQ(v, 0.0);
  }
}

TEST(AssembleDivCurl3, VariantsAreEquivalent) {
  std::mt19937_64 rng(8);
  const ProblemSpec p = builtin_problem("jump-diffusion");
  double lo = 1e300, hi = 0.0;
  for (int n : {2, 4, 8, 16}) {
    const LsSystem sys = assemble(Method::DivCurl3, square(n), p);
    for (int trial = 0; trial < 50; ++trial) {
      const DiscreteFields f = random_fields(rng, sys);
      double j[3];
      for (int v = 0; v < 3; ++v) {
        AssemblyOptions opt;
        opt.variant = static_cast<DivCurlVariant>(v);
        j[v] = functional_value(Method::DivCurl3, f, p, false, opt);
      }
      for (double r : {j[0] / j[1], j[0] / j[2]}) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }
  }
  EXPECT_GT(lo, 0.05);
  EXPECT_LT(hi, 20.0);
}

TEST(AssembleDivCurl3, ZeroPotentialLeavesFluxAndIntensityTerms) {
  std::mt19937_64 rng(12);
  const ProblemSpec p = builtin_problem("poisson-sine");
  const LsSystem sys = assemble(Method::DivCurl3, square(3), p);
  DiscreteFields f = random_fields(rng, sys);
  f.u = Field(sys.spaces[1]);
  const Triangulation& m = *sys.spaces[0]->mesh_ptr();
  const double oracle = midpoint_integral(m, [&](int t, const Bary& l) {
    const ShapeValue s = eval_field(f.sigma, t, l);
    const ShapeValue q = eval_field(f.phi, t, l);
    const Vec2 d = s.vec - q.vec;
    return dot(s.vec, s.vec) + dot(d, d) + q.curl * q.curl + s.div * s.div;
  });
  EXPECT_LE(rel_diff(functional_value(Method::DivCurl3, f, p, false), oracle), 1e-12);
}

TEST(AssembleDivCurl2, RestrictionGuard) {
  EXPECT_THROW(assemble(Method::DivCurl2, square(4), builtin_problem("jump-diffusion")), RestrictionError);
  EXPECT_THROW(assemble(Method::DivCurl2, lsfem::testing::lshape(2), builtin_problem("lshape-singular")), RestrictionError);
  ProblemSpec aniso = builtin_problem("poisson-sine");
  aniso.A = [](const Point&) { return Mat2{2.0, 0.5, 0.5, 1.0}; };
  EXPECT_THROW(assemble(Method::DivCurl2, square(2), aniso), RestrictionError);
  const LsSystem sys = assemble(Method::DivCurl2, square(4), builtin_problem("poisson-sine"));
  EXPECT_EQ(sys.matrix.symmetry_error(), 0.0);
  try {
    assemble(Method::DivCurl2, square(4), builtin_problem("jump-diffusion"));
  } catch (const RestrictionError& e) {
    EXPECT_NE(std::string(e.what()).find("jump-diffusion"), std::string::npos);
  }
}

TEST(AssembleDivCurl2, FluxPotentialRateOne) {
  const ProblemSpec p = builtin_problem("poisson-sine");
  std::vector<double> e;
  for (int n : {4, 8, 16}) {
    const LsSystem sys = assemble(Method::DivCurl2, square(n), p);
    const SolveReport r = cg_solve(sys);
    ASSERT_TRUE(r.converged);
    e.push_back(error_vs_exact(Method::DivCurl2, split_solution(sys, r.solution), p).flux_h1_potential);
  }
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_GE(std::log2(e[i - 1] / e[i]), 0.9);
}

TEST(AssembleGalerkin, StiffnessMatrixOracle) {
  const MeshPtr m = square(3, {Side::Left, Side::Bottom});
  const LsSystem sys = assemble(Method::GalerkinCR, m, builtin_problem("poisson-sine"));
  const SpacePtr cr = sys.spaces[0];
  std::vector<double> k(sz(cr->dof_count() * cr->dof_count()), 0.0);
  for (int t = 0; t < m->num_triangles(); ++t) {
    const auto g = m->grad_barycentric(t);
    const auto dofs = cr->cell_dofs(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (dofs[sz(i)] < 0 || dofs[sz(j)] < 0) continue;
        // CR basis 1 - 2 lambda_i has gradient -2 grad lambda_i
        k[sz(dofs[sz(i)] * cr->dof_count() + dofs[sz(j)])] += 4.0 * m->area(t) * dot(g[sz(i)], g[sz(j)]);
      }
    }
  }
  const std::vector<double> d = sys.matrix.dense();
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(d[i], k[i], 1e-13);
  EXPECT_EQ(sys.matrix.symmetry_error(), 0.0);
}

TEST(AssembleGalerkin, ConvectionBreaksSymmetry) {
  const LsSystem sys = assemble(Method::GalerkinCR, square(3), builtin_problem("convection", {{"beta1", 1.0}, {"beta2", 0.0}}));
  EXPECT_GT(sys.matrix.symmetry_error(), 1e-3);
}

TEST(AssembleGalerkin, BrokenEnergyRateOne) {
  const ProblemSpec p = builtin_problem("poisson-sine");
  std::vector<double> e;
  for (int n : {4, 8, 16, 32}) {
    const LsSystem sys = assemble(Method::GalerkinCR, square(n), p);
    const SolveReport r = cg_solve(sys);
    e.push_back(error_vs_exact(Method::GalerkinCR, split_solution(sys, r.solution), p).grad_u);
  }
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_NEAR(std::log2(e[i - 1] / e[i]), 1.0, 0.1);
}

TEST(FunctionalValue, RepresentableSolutionIsExactlyZero) {
  const ProblemSpec p = builtin_problem("linear-x");
  const MeshPtr m = square(4, p.dirichlet_sides);
  DiscreteFields f;
  f.sigma = interpolate(build_space(m, SpaceKind::RT0), p.exact->sigma);
  f.u = interpolate(build_space(m, SpaceKind::CR_D), p.exact->u);
  EXPECT_LE(functional_value(Method::Div2, f, p, true), 1e-20);
  EXPECT_LE(functional_value(Method::Div2, m, exact_slots(*p.exact), p, true), 1e-20);
}

TEST(TripleNorm, BasicValues) {
  const MeshPtr m = square(4);
  DiscreteFields zero;
  zero.sigma = Field(build_space(m, SpaceKind::RT0_N));
  zero.u = Field(build_space(m, SpaceKind::CR_D));
  EXPECT_EQ(triple_norm(zero), 0.0);
  DiscreteFields unit = zero;
  unit.sigma = interpolate(zero.sigma.space, VectorFn([](const Point&) { return Vec2{1.0, 0.0}; }));
  EXPECT_NEAR(triple_norm_sq(unit), 1.0, 1e-13);
}

TEST(TripleNorm, MatchesElementOracle) {
  std::mt19937_64 rng(21);
  for (const MeshPtr& m : {square(3), lsfem::testing::lshape(2)}) {
    DiscreteFields f;
    f.sigma = random_field(rng, build_space(m, SpaceKind::RT0_N));
    f.u = random_field(rng, build_space(m, SpaceKind::CR_D));
    const double oracle = midpoint_integral(*m, [&](int t, const Bary& l) {
      const ShapeValue s = eval_field(f.sigma, t, l);
      const ShapeValue v = eval_field(f.u, t, l);
      return dot(v.grad, v.grad) + dot(s.vec, s.vec) + s.div * s.div;
    });
    EXPECT_LE(rel_diff(triple_norm_sq(f), oracle), 1e-12);
  }
}

TEST(TripleNorm, PoincareFriedrichsRatioStable) {
  std::mt19937_64 rng(31);
  std::vector<double> worst;
  Triangulation mesh = make_structured_square(4, {Side::Left});
  for (int level = 0; level < 4; ++level) {
    const SpacePtr cr = build_space(std::make_shared<const Triangulation>(mesh), SpaceKind::CR_D);
    double w = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Field v = random_field(rng, cr);
      const double l2 = midpoint_integral(mesh, [&](int t, const Bary& l) { return std::pow(eval_field(v, t, l).value, 2); });
      const double h1 = midpoint_integral(mesh, [&](int t, const Bary& l) {
        const Vec2 g = eval_field(v, t, l).grad;
        return dot(g, g);
      });
      w = std::max(w, std::sqrt(l2 / h1));
    }
    worst.push_back(w);
    mesh = refine_uniform(mesh);
  }
  for (std::size_t i = 1; i < worst.size(); ++i) EXPECT_LE(worst[i], 1.5 * worst[0]);
}

TEST(ErrorVsExact, ExactFieldsGiveZero) {
  const ProblemSpec p = builtin_problem("linear-x");
  const MeshPtr m = square(4, p.dirichlet_sides);
  DiscreteFields f;
  f.sigma = interpolate(build_space(m, SpaceKind::RT0), p.exact->sigma);
  f.u = interpolate(build_space(m, SpaceKind::CR_D), p.exact->u);
  const ErrorReport e = error_vs_exact(Method::Div2, f, p);
  EXPECT_LE(e.triple, 1e-13);
  EXPECT_LE(e.l2_u, 1e-13);
  EXPECT_LE(e.sigma, 1e-13);
  EXPECT_THROW(error_vs_exact(Method::Div2, f, zero_data(p)), InvalidArgument);
}

TEST(ErrorVsExact, PoissonRates) {
  const ProblemSpec p = builtin_problem("poisson-sine");
  ErrorReport e[2];
  int k = 0;
  for (int n : {8, 16}) {
    const LsSystem sys = assemble(Method::Div2, square(n), p);
    e[k++] = error_vs_exact(Method::Div2, split_solution(sys, cg_solve(sys).solution), p);
  }
  const double ratio = e[0].triple / e[1].triple;
  EXPECT_GE(ratio, 1.8);
  EXPECT_LE(ratio, 2.2);
  EXPECT_NEAR(std::log2(e[0].l2_u / e[1].l2_u), 2.0, 0.25);
}

TEST(SparseMatrix, TripletsSummedAndChecked) {
  const SparseMatrix a = SparseMatrix::from_triplets(2, 3, {{0, 1, 1.0}, {1, 2, 2.0}, {0, 1, 0.5}, {1, 0, -1.0}});
  EXPECT_EQ(a.nnz(), 3u);
  EXPECT_EQ(a.at(0, 1), 1.5);
  EXPECT_EQ(a.at(1, 1), 0.0);
  const std::vector<double> y = a.multiply(std::vector<double>{1.0, 2.0, 3.0});
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(y[1], 5.0);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), InvalidArgument);
}

TEST(Assemble, DeterministicBitwise) {
  const ProblemSpec p = builtin_problem("jump-diffusion");
  const LsSystem a = assemble(Method::DivCurl3, square(6), p);
  const LsSystem b = assemble(Method::DivCurl3, square(6), p);
  EXPECT_EQ(a.matrix.values(), b.matrix.values());
  EXPECT_EQ(a.matrix.col_index(), b.matrix.col_index());
  EXPECT_EQ(a.rhs, b.rhs);
}

TEST(Assemble, MethodNames) {
  for (Method m : {Method::Div2, Method::DivCurl3, Method::DivCurl2, Method::GalerkinCR}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("galerkin_cr"), Method::GalerkinCR);
  EXPECT_THROW(parse_method("fosls"), InvalidArgument);
}
