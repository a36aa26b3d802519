#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

#include "lsfem/errors.hpp"
#include "lsfem/mesh.hpp"
#include "support.hpp"

using namespace lsfem;

namespace {

int euler(const Triangulation& m) { return m.num_vertices() - m.num_edges() + m.num_triangles(); }

double tagged_length(const Triangulation& m, BoundaryTag tag) {
  double len = 0.0;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.edge_tag(e) == tag) len += m.edge_length(e);
  }
  return len;
}

}  // namespace

TEST(StructuredSquare, SingleCellCounts) {
  const Triangulation m = make_structured_square(1);
  EXPECT_EQ(m.num_vertices(), 4);
  EXPECT_EQ(m.num_edges(), 5);
  EXPECT_EQ(m.num_triangles(), 2);
}

TEST(StructuredSquare, TwoByTwoCountsAndEuler) {
  const Triangulation m = make_structured_square(2);
  EXPECT_EQ(m.num_vertices(), 9);
  EXPECT_EQ(m.num_edges(), 16);
  EXPECT_EQ(m.num_triangles(), 8);
  EXPECT_EQ(euler(m), 1);
}

TEST(StructuredSquare, EdgeCountClosedForm) {
  for (int n : {1, 2, 3, 4, 7}) {
    const Triangulation m = make_structured_square(n);
    EXPECT_EQ(m.num_edges(), 3 * n * n + 2 * n) << "n=" << n;
    EXPECT_EQ(euler(m), 1);
  }
}

TEST(StructuredSquare, RejectsNonPositive) {
  EXPECT_THROW(make_structured_square(0), InvalidArgument);
  EXPECT_THROW(make_lshape(-1), InvalidArgument);
}

TEST(StructuredSquare, TrianglesAreCounterclockwise) {
  const Triangulation m = make_structured_square(3);
  for (int t = 0; t < m.num_triangles(); ++t) EXPECT_GT(m.area(t), 0.0);
  double total = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) total += m.area(t);
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(StructuredSquare, BoundaryTagsFollowSides) {
  const Triangulation m = make_structured_square(4, {Side::Left, Side::Top});
  for (int e = 0; e < m.num_edges(); ++e) {
    const Point c = m.edge_midpoint(e);
    const bool on_boundary = c.x < 1e-12 || c.x > 1 - 1e-12 || c.y < 1e-12 || c.y > 1 - 1e-12;
    if (!on_boundary) {
      EXPECT_EQ(m.edge_tag(e), BoundaryTag::Interior);
    } else if (c.x < 1e-12 || c.y > 1 - 1e-12) {
      EXPECT_EQ(m.edge_tag(e), BoundaryTag::Dirichlet);
    } else {
      EXPECT_EQ(m.edge_tag(e), BoundaryTag::Neumann);
    }
  }
}

TEST(Orientation, NormalIsClockwiseTangentAndSignsAgree) {
  const Triangulation m = make_structured_square(3);
  for (int e = 0; e < m.num_edges(); ++e) {
    const auto [lo, hi] = m.edge(e);
    EXPECT_LT(lo, hi);
    const Vec2 t = m.edge_tangent(e);
    const Vec2 d = m.vertex(hi) - m.vertex(lo);
    EXPECT_NEAR(t.x, d.x / norm(d), 1e-15);
    EXPECT_NEAR(t.y, d.y / norm(d), 1e-15);
    const Vec2 n = m.edge_normal(e);
    EXPECT_NEAR(n.x, t.y, 1e-15);
    EXPECT_NEAR(n.y, -t.x, 1e-15);
  }
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Point c = m.centroid(t);
    for (int i = 0; i < 3; ++i) {
      const int e = m.triangle_edge(t, i);
      const Vec2 outward_guess = m.edge_midpoint(e) - c;
      const int expected = dot(outward_guess, m.edge_normal(e)) > 0 ? 1 : -1;
      EXPECT_EQ(m.edge_sign(t, i), expected);
      // local edge i is opposite vertex i
      const auto [a, b] = m.edge(e);
      EXPECT_NE(a, m.triangle(t)[static_cast<std::size_t>(i)]);
      EXPECT_NE(b, m.triangle(t)[static_cast<std::size_t>(i)]);
    }
  }
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.edge_tag(e) != BoundaryTag::Interior) continue;
    const auto [k1, k2] = m.edge_triangles(e);
    ASSERT_GE(k2, 0);
    EXPECT_EQ(m.edge_sign(k1, m.local_edge_index(k1, e)), -m.edge_sign(k2, m.local_edge_index(k2, e)));
  }
}

TEST(LShape, CountsAndReentrantCorner) {
  const Triangulation m1 = make_lshape(1);
  EXPECT_EQ(m1.num_triangles(), 6);
  EXPECT_EQ(euler(m1), 1);

  const Triangulation m2 = make_lshape(2);
  EXPECT_EQ(euler(m2), 1);
  // the eight lattice points of the coarse ring are all present
  for (const Point& p : m1.vertices()) {
    const bool found = std::any_of(m2.vertices().begin(), m2.vertices().end(),
                                   [&](const Point& q) { return norm(p - q) < 1e-14; });
    EXPECT_TRUE(found) << p.x << "," << p.y;
  }
  for (int n : {1, 2, 3, 5}) {
    const Triangulation m = make_lshape(n);
    const auto sums = vertex_angle_sums(m);
    int reentrant = 0;
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (std::abs(sums[static_cast<std::size_t>(v)] - 1.5 * std::numbers::pi) < 1e-10) {
        ++reentrant;
        EXPECT_NEAR(norm(m.vertex(v)), 0.0, 1e-14);
      }
    }
    EXPECT_EQ(reentrant, 1) << "n=" << n;
    double area = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) area += m.area(t);
    EXPECT_NEAR(area, 3.0, 1e-13);
  }
}

TEST(RefineUniform, QuadruplesAndHalves) {
  const Triangulation m = make_structured_square(1);
  const Triangulation r = refine_uniform(m);
  EXPECT_EQ(r.num_triangles(), 8);
  EXPECT_EQ(euler(r), 1);
  EXPECT_DOUBLE_EQ(mesh_stats(r).h_max, 0.5 * mesh_stats(m).h_max);
  r.validate();
}

TEST(RefineUniform, EulerAndDirichletPointSetPreserved) {
  Triangulation m = make_structured_square(2, {Side::Left, Side::Bottom});
  const double dir = tagged_length(m, BoundaryTag::Dirichlet);
  const double neu = tagged_length(m, BoundaryTag::Neumann);
  for (int level = 0; level < 3; ++level) {
    m = refine_uniform(m);
    m.validate();
    EXPECT_EQ(euler(m), 1);
    EXPECT_NEAR(tagged_length(m, BoundaryTag::Dirichlet), dir, 1e-13);
    EXPECT_NEAR(tagged_length(m, BoundaryTag::Neumann), neu, 1e-13);
    for (int e = 0; e < m.num_edges(); ++e) {
      if (m.edge_tag(e) != BoundaryTag::Dirichlet) continue;
      const Point c = m.edge_midpoint(e);
      EXPECT_TRUE(c.x < 1e-14 || c.y < 1e-14);
    }
  }
  const Triangulation l = refine_uniform(make_lshape(1));
  l.validate();
  EXPECT_EQ(l.num_triangles(), 24);
}

TEST(RefineUniform, ParentsPointIntoCoarseMesh) {
  const Triangulation m = make_structured_square(2);
  const Triangulation r = refine_uniform(m);
  std::vector<int> children(static_cast<std::size_t>(m.num_triangles()), 0);
  for (int t = 0; t < r.num_triangles(); ++t) {
    const int p = r.parent(t);
    ASSERT_GE(p, 0);
    ASSERT_LT(p, m.num_triangles());
    ++children[static_cast<std::size_t>(p)];
    const Bary l = m.barycentric(p, r.centroid(t));
    for (double x : l) EXPECT_GE(x, -1e-12);
  }
  for (int c : children) EXPECT_EQ(c, 4);
}

TEST(BisectMarked, EmptyMarkingIsIdentity) {
  const Triangulation m = make_structured_square(3);
  const Triangulation r = bisect_marked(m, {});
  EXPECT_EQ(r.num_triangles(), m.num_triangles());
  EXPECT_EQ(r.num_vertices(), m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) {
    EXPECT_EQ(r.vertex(v).x, m.vertex(v).x);
    EXPECT_EQ(r.vertex(v).y, m.vertex(v).y);
  }
  for (int t = 0; t < m.num_triangles(); ++t) EXPECT_EQ(r.triangle(t), m.triangle(t));
  const Triangulation again = bisect_marked(r, {});
  EXPECT_EQ(again.num_triangles(), r.num_triangles());
}

TEST(BisectMarked, AllMarkedBisectsEveryParent) {
  const Triangulation m = make_structured_square(2);
  std::vector<int> all(static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) all[static_cast<std::size_t>(t)] = t;
  const Triangulation r = bisect_marked(m, all);
  r.validate();
  std::vector<int> children(static_cast<std::size_t>(m.num_triangles()), 0);
  for (int t = 0; t < r.num_triangles(); ++t) ++children[static_cast<std::size_t>(r.parent(t))];
  for (int c : children) EXPECT_GE(c, 2);
  std::map<EdgeKey, int> use;
  for (const Triangle& t : r.triangles()) {
    for (int i = 0; i < 3; ++i) ++use[edge_key(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>((i + 1) % 3)])];
  }
  for (const auto& [k, c] : use) EXPECT_LE(c, 2);
}

TEST(BisectMarked, SingleMarkClosureTerminates) {
  const Triangulation m = make_structured_square(4);
  for (int t : {0, 5, 17, 31}) {
    const std::vector<int> marked{t};
    const Triangulation r = bisect_marked(m, marked);
    r.validate();
    EXPECT_GT(r.num_triangles(), m.num_triangles());
    EXPECT_EQ(euler(r), 1);
  }
  EXPECT_THROW(bisect_marked(m, std::vector<int>{m.num_triangles()}), InvalidArgument);
}

TEST(BisectMarked, RandomMarkingsKeepInvariantsAndShape) {
  std::mt19937_64 rng(7);
  Triangulation m = make_lshape(2);
  const double min_angle0 = mesh_stats(m).min_angle;
  for (int it = 0; it < 8; ++it) {
    std::vector<int> marked;
    std::bernoulli_distribution pick(0.2);
    for (int t = 0; t < m.num_triangles(); ++t) {
      if (pick(rng)) marked.push_back(t);
    }
    m = bisect_marked(m, marked);
    m.validate();
    EXPECT_EQ(euler(m), 1);
    double area = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) area += m.area(t);
    EXPECT_NEAR(area, 3.0, 1e-12);
    // newest-vertex bisection produces finitely many similarity classes
    EXPECT_GE(mesh_stats(m).min_angle, min_angle0 / 2.0 - 1e-9);
  }
}

TEST(MeshStats, SquareValues) {
  const MeshStats s = mesh_stats(make_structured_square(1));
  EXPECT_DOUBLE_EQ(s.h_max, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(s.h_min, 1.0);
  EXPECT_NEAR(s.min_angle, 45.0, 1e-12);
  EXPECT_EQ(s.num_vertices, 4);
  EXPECT_EQ(s.num_edges, 5);
  EXPECT_EQ(s.num_triangles, 2);
  EXPECT_DOUBLE_EQ(mesh_stats(refine_uniform(make_structured_square(1))).h_max, std::sqrt(2.0) / 2.0);
}

TEST(Validate, RejectsBrokenMeshes) {
  const Triangulation m = make_structured_square(1);
  std::vector<Triangle> tris = m.triangles();
  std::swap(tris[0][1], tris[0][2]);  // clockwise
  EXPECT_THROW(Triangulation(m.vertices(), tris, m.boundary_tag_map()).validate(), InvalidArgument);
  std::vector<Triangle> bad = m.triangles();
  bad[0][0] = 17;
  EXPECT_THROW(Triangulation(m.vertices(), bad, m.boundary_tag_map()), InvalidArgument);
}

TEST(Sides, ParseAndPrint) {
  EXPECT_EQ(parse_sides("left, top"), (SideSet{Side::Left, Side::Top}));
  EXPECT_EQ(parse_sides("all"), SideSet::all());
  EXPECT_THROW(parse_sides("front"), InvalidArgument);
  EXPECT_EQ(parse_sides(to_string(SideSet{Side::Bottom, Side::Right})), (SideSet{Side::Bottom, Side::Right}));
}
