#include "lsfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

int longest_local_edge(const std::vector<Point>& vertices, const Triangle& t) {
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    const Point& a = vertices[idx(t[idx((i + 1) % 3)])];
    const Point& b = vertices[idx(t[idx((i + 2) % 3)])];
    const double len = norm(b - a);
    // ties resolved toward the lower local index
    if (len > best_len * (1.0 + 1e-12)) {
      best = i;
      best_len = len;
    }
  }
  return best;
}

}  // namespace

SideSet parse_sides(const std::string& text) {
  SideSet sides;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (item.empty()) continue;
    if (item == "all") {
      sides = SideSet::all();
    } else if (item == "left") {
      sides.add(Side::Left);
    } else if (item == "right") {
      sides.add(Side::Right);
    } else if (item == "bottom") {
      sides.add(Side::Bottom);
    } else if (item == "top") {
      sides.add(Side::Top);
    } else {
      throw InvalidArgument("unknown side '" + item + "'");
    }
  }
  return sides;
}

std::string to_string(SideSet sides) {
  std::string out;
  const std::pair<Side, const char*> names[] = {
      {Side::Left, "left"}, {Side::Right, "right"}, {Side::Bottom, "bottom"}, {Side::Top, "top"}};
  for (const auto& [side, name] : names) {
    if (!sides.contains(side)) continue;
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

Triangulation::Triangulation(std::vector<Point> vertices, std::vector<Triangle> triangles,
                             const std::unordered_map<EdgeKey, BoundaryTag>& boundary_tags,
                             std::vector<int> refinement_edge, std::vector<int> parent)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      refinement_edge_(std::move(refinement_edge)),
      parent_(std::move(parent)) {
  const int nt = num_triangles();
  for (const Triangle& t : triangles_) {
    for (int v : t) {
      if (v < 0 || v >= num_vertices()) throw InvalidArgument("triangle references a missing vertex");
    }
  }
  if (refinement_edge_.empty()) {
    refinement_edge_.resize(idx(nt));
    for (int t = 0; t < nt; ++t) refinement_edge_[idx(t)] = longest_local_edge(vertices_, triangles_[idx(t)]);
  }
  if (static_cast<int>(refinement_edge_.size()) != nt) throw InvalidArgument("refinement_edge size mismatch");
  if (!parent_.empty() && static_cast<int>(parent_.size()) != nt) throw InvalidArgument("parent size mismatch");

  std::unordered_map<EdgeKey, int> edge_index;
  edge_index.reserve(idx(3 * nt));
  tri_edges_.resize(idx(nt));
  tri_signs_.resize(idx(nt));
  for (int t = 0; t < nt; ++t) {
    const Triangle& tri = triangles_[idx(t)];
    for (int i = 0; i < 3; ++i) {
      const int a = tri[idx((i + 1) % 3)];
      const int b = tri[idx((i + 2) % 3)];
      if (a == b) throw InvalidArgument("degenerate triangle");
      const EdgeKey key = edge_key(a, b);
      auto [it, inserted] = edge_index.try_emplace(key, num_edges());
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_tris_.push_back({-1, -1});
      }
      const int e = it->second;
      const int sign = a < b ? 1 : -1;
      tri_edges_[idx(t)][idx(i)] = e;
      tri_signs_[idx(t)][idx(i)] = sign;
      auto& adj = edge_tris_[idx(e)];
      if (adj[0] >= 0 && adj[1] >= 0) throw InvalidArgument("edge shared by more than two triangles");
      if (adj[0] < 0 && adj[1] < 0) {
        adj[0] = t;
      } else {
        const int other = adj[0] >= 0 ? adj[0] : adj[1];
        adj = {-1, -1};
        // K- carries the edge normal as its outward normal.
        if (sign > 0) {
          adj = {t, other};
        } else {
          adj = {other, t};
        }
      }
    }
  }

  const int ne = num_edges();
  tags_.assign(idx(ne), BoundaryTag::Interior);
  h_.resize(idx(ne));
  vertex_dirichlet_.assign(idx(num_vertices()), 0);
  vertex_neumann_.assign(idx(num_vertices()), 0);
  for (int e = 0; e < ne; ++e) {
    const auto& ed = edges_[idx(e)];
    h_[idx(e)] = norm(vertices_[idx(ed[1])] - vertices_[idx(ed[0])]);
    if (edge_tris_[idx(e)][1] >= 0) continue;
    auto it = boundary_tags.find(edge_key(ed[0], ed[1]));
    if (it == boundary_tags.end() || it->second == BoundaryTag::Interior) {
      std::ostringstream msg;
      msg << "boundary edge (" << ed[0] << ", " << ed[1] << ") has no boundary tag (non-conforming mesh?)";
      throw InvalidArgument(msg.str());
    }
    tags_[idx(e)] = it->second;
    auto& flags = it->second == BoundaryTag::Dirichlet ? vertex_dirichlet_ : vertex_neumann_;
    flags[idx(ed[0])] = 1;
    flags[idx(ed[1])] = 1;
  }
}

int Triangulation::local_edge_index(int t, int e) const {
  const auto& te = tri_edges_[idx(t)];
  for (int i = 0; i < 3; ++i) {
    if (te[idx(i)] == e) return i;
  }
  throw InvalidArgument("edge " + std::to_string(e) + " is not an edge of triangle " + std::to_string(t));
}

Vec2 Triangulation::edge_tangent(int e) const {
  const auto& ed = edges_[idx(e)];
  return (1.0 / h_[idx(e)]) * (vertices_[idx(ed[1])] - vertices_[idx(ed[0])]);
}

Point Triangulation::edge_midpoint(int e) const {
  const auto& ed = edges_[idx(e)];
  return 0.5 * (vertices_[idx(ed[0])] + vertices_[idx(ed[1])]);
}

double Triangulation::area(int t) const {
  const Triangle& tri = triangles_[idx(t)];
  const Point& a = vertices_[idx(tri[0])];
  return 0.5 * cross(vertices_[idx(tri[1])] - a, vertices_[idx(tri[2])] - a);
}

Point Triangulation::centroid(int t) const { return map(t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}); }

Point Triangulation::map(int t, const Bary& lambda) const {
  const Triangle& tri = triangles_[idx(t)];
  return lambda[0] * vertices_[idx(tri[0])] + lambda[1] * vertices_[idx(tri[1])] +
         lambda[2] * vertices_[idx(tri[2])];
}

Bary Triangulation::barycentric(int t, const Point& x) const {
  const Triangle& tri = triangles_[idx(t)];
  const Point& a = vertices_[idx(tri[0])];
  const Point& b = vertices_[idx(tri[1])];
  const Point& c = vertices_[idx(tri[2])];
  const double twice_area = cross(b - a, c - a);
  const double l1 = cross(x - a, c - a) / twice_area;
  const double l2 = cross(b - a, x - a) / twice_area;
  return {1.0 - l1 - l2, l1, l2};
}

std::array<Vec2, 3> Triangulation::grad_barycentric(int t) const {
  const Triangle& tri = triangles_[idx(t)];
  const double twice_area = 2.0 * area(t);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point& p = vertices_[idx(tri[idx((i + 1) % 3)])];
    const Point& q = vertices_[idx(tri[idx((i + 2) % 3)])];
    // inward normal of the opposite edge, scaled by 1/height
    g[idx(i)] = (1.0 / twice_area) * rotate_ccw(q - p);
  }
  return g;
}

std::unordered_map<EdgeKey, BoundaryTag> Triangulation::boundary_tag_map() const {
  std::unordered_map<EdgeKey, BoundaryTag> out;
  for (int e = 0; e < num_edges(); ++e) {
    if (tags_[idx(e)] != BoundaryTag::Interior) out.emplace(edge_key(edges_[idx(e)][0], edges_[idx(e)][1]), tags_[idx(e)]);
  }
  return out;
}

void Triangulation::validate() const {
  auto fail = [](const std::string& why) { throw InvalidArgument("invalid triangulation: " + why); };
  for (int t = 0; t < num_triangles(); ++t) {
    if (!(area(t) > 0.0)) fail("triangle " + std::to_string(t) + " is not counterclockwise");
  }
  bool has_dirichlet = false;
  for (int e = 0; e < num_edges(); ++e) {
    const auto& adj = edge_tris_[idx(e)];
    const BoundaryTag tag = tags_[idx(e)];
    if (adj[0] < 0) fail("edge without triangles");
    if (tag == BoundaryTag::Interior) {
      if (adj[1] < 0) fail("interior edge with a single triangle");
      const int lm = local_edge_index(adj[0], e);
      const int lp = local_edge_index(adj[1], e);
      if (edge_sign(adj[0], lm) != 1 || edge_sign(adj[1], lp) != -1) fail("K-/K+ orientation mismatch");
      // outward normal of K- must coincide with n_F
      const Triangle& tri = triangles_[idx(adj[0])];
      const Point& opp = vertices_[idx(tri[idx(lm)])];
      if (dot(edge_normal(e), opp - edge_midpoint(e)) >= 0.0) fail("edge normal is not outward for K-");
    } else {
      if (adj[1] >= 0) fail("boundary edge with two triangles");
      if (tag == BoundaryTag::Dirichlet) has_dirichlet = true;
    }
    const auto& ed = edges_[idx(e)];
    if (!(ed[0] < ed[1])) fail("edge orientation must be lower vertex first");
  }
  if (!has_dirichlet) fail("the Dirichlet boundary is empty");
  if (num_vertices() - num_edges() + num_triangles() != 1) fail("Euler relation V - E + T = 1 violated");
  for (int t = 0; t < num_triangles(); ++t) {
    const int r = refinement_edge_[idx(t)];
    if (r < 0 || r > 2) fail("refinement edge out of range");
  }
}

Triangulation make_structured_square(int n, SideSet dirichlet_sides) {
  if (n < 1) throw InvalidArgument("make_structured_square: n must be >= 1");
  if (dirichlet_sides.empty()) throw InvalidArgument("make_structured_square: Dirichlet side set is empty");
  const int nv = n + 1;
  std::vector<Point> vertices;
  vertices.reserve(idx(nv * nv));
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nv; ++i) vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  }
  auto vid = [nv](int i, int j) { return j * nv + i; };
  std::vector<Triangle> triangles;
  std::vector<int> refinement;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      triangles.push_back({v00, v10, v11});
      refinement.push_back(1);
      triangles.push_back({v00, v11, v01});
      refinement.push_back(2);
    }
  }
  std::unordered_map<EdgeKey, BoundaryTag> tags;
  auto tag_of = [&](Side s) { return dirichlet_sides.contains(s) ? BoundaryTag::Dirichlet : BoundaryTag::Neumann; };
  for (int k = 0; k < n; ++k) {
    tags[edge_key(vid(k, 0), vid(k + 1, 0))] = tag_of(Side::Bottom);
    tags[edge_key(vid(k, n), vid(k + 1, n))] = tag_of(Side::Top);
    tags[edge_key(vid(0, k), vid(0, k + 1))] = tag_of(Side::Left);
    tags[edge_key(vid(n, k), vid(n, k + 1))] = tag_of(Side::Right);
  }
  Triangulation mesh(std::move(vertices), std::move(triangles), tags, std::move(refinement));
  mesh.validate();
  return mesh;
}

Triangulation make_lshape(int n, bool all_dirichlet) {
  if (n < 1) throw InvalidArgument("make_lshape: n must be >= 1");
  const int nv = 2 * n + 1;
  auto coord = [n](int i) { return -1.0 + static_cast<double>(i) / n; };
  // lattice point (i, j) is removed when x > 0 and y < 0
  auto removed = [n](int i, int j) { return i > n && j < n; };
  std::vector<int> vid(idx(nv * nv), -1);
  std::vector<Point> vertices;
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nv; ++i) {
      if (removed(i, j)) continue;
      vid[idx(j * nv + i)] = static_cast<int>(vertices.size());
      vertices.push_back({coord(i), coord(j)});
    }
  }
  auto v = [&](int i, int j) { return vid[idx(j * nv + i)]; };
  std::vector<Triangle> triangles;
  std::vector<int> refinement;
  for (int j = 0; j < 2 * n; ++j) {
    for (int i = 0; i < 2 * n; ++i) {
      if (i >= n && j < n) continue;  // cell inside the removed quadrant
      const int v00 = v(i, j), v10 = v(i + 1, j), v11 = v(i + 1, j + 1), v01 = v(i, j + 1);
      triangles.push_back({v00, v10, v11});
      refinement.push_back(1);
      triangles.push_back({v00, v11, v01});
      refinement.push_back(2);
    }
  }
  // boundary edges: edges used by exactly one triangle
  std::unordered_map<EdgeKey, int> count;
  for (const Triangle& t : triangles) {
    for (int i = 0; i < 3; ++i) ++count[edge_key(t[idx((i + 1) % 3)], t[idx((i + 2) % 3)])];
  }
  std::unordered_map<EdgeKey, BoundaryTag> tags;
  for (const auto& [key, c] : count) {
    if (c != 1) continue;
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    const Point mid = 0.5 * (vertices[idx(a)] + vertices[idx(b)]);
    const bool reentrant = (std::abs(mid.x) < 1e-12 && mid.y < 0.0) || (std::abs(mid.y) < 1e-12 && mid.x > 0.0);
    tags[key] = (all_dirichlet || reentrant) ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
  }
  Triangulation mesh(std::move(vertices), std::move(triangles), tags, std::move(refinement));
  mesh.validate();
  return mesh;
}

Triangulation refine_uniform(const Triangulation& m) {
  std::vector<Point> vertices = m.vertices();
  const int nv = m.num_vertices();
  std::vector<int> midpoint(idx(m.num_edges()));
  for (int e = 0; e < m.num_edges(); ++e) {
    midpoint[idx(e)] = nv + e;
    vertices.push_back(m.edge_midpoint(e));
  }
  std::vector<Triangle> triangles;
  std::vector<int> parent;
  triangles.reserve(idx(4 * m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle& tri = m.triangle(t);
    // m_i sits on local edge i, opposite vertex i
    const int m0 = midpoint[idx(m.triangle_edge(t, 0))];
    const int m1 = midpoint[idx(m.triangle_edge(t, 1))];
    const int m2 = midpoint[idx(m.triangle_edge(t, 2))];
    triangles.push_back({tri[0], m2, m1});
    triangles.push_back({m2, tri[1], m0});
    triangles.push_back({m1, m0, tri[2]});
    triangles.push_back({m0, m1, m2});
    for (int k = 0; k < 4; ++k) parent.push_back(t);
  }
  std::unordered_map<EdgeKey, BoundaryTag> tags;
  for (int e = 0; e < m.num_edges(); ++e) {
    const BoundaryTag tag = m.edge_tag(e);
    if (tag == BoundaryTag::Interior) continue;
    const auto& ed = m.edge(e);
    tags[edge_key(ed[0], midpoint[idx(e)])] = tag;
    tags[edge_key(midpoint[idx(e)], ed[1])] = tag;
  }
  Triangulation fine(std::move(vertices), std::move(triangles), tags, {}, std::move(parent));
  fine.validate();
  return fine;
}

Triangulation bisect_marked(const Triangulation& m, std::span<const int> marked) {
  // Edges scheduled for bisection, keyed by vertex pair.
  std::unordered_set<EdgeKey> split;
  std::vector<int> queue;
  auto ref_edge = [&m](int t) { return m.triangle_edge(t, m.refinement_edge(t)); };
  std::vector<std::uint8_t> edge_marked(idx(m.num_edges()), 0);
  for (int t : marked) {
    if (t < 0 || t >= m.num_triangles()) throw InvalidArgument("bisect_marked: triangle index out of range");
    const int e = ref_edge(t);
    if (!edge_marked[idx(e)]) {
      edge_marked[idx(e)] = 1;
      queue.push_back(e);
    }
  }
  if (queue.empty()) return m;
  // Closure: a triangle with any marked edge must also bisect its refinement edge.
  while (!queue.empty()) {
    const int e = queue.back();
    queue.pop_back();
    for (int t : m.edge_triangles(e)) {
      if (t < 0) continue;
      const int r = ref_edge(t);
      if (!edge_marked[idx(r)]) {
        edge_marked[idx(r)] = 1;
        queue.push_back(r);
      }
    }
  }

  std::vector<Point> vertices = m.vertices();
  std::unordered_map<EdgeKey, int> midpoint;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (!edge_marked[idx(e)]) continue;
    const auto& ed = m.edge(e);
    midpoint[edge_key(ed[0], ed[1])] = static_cast<int>(vertices.size());
    vertices.push_back(m.edge_midpoint(e));
  }

  struct Cell {
    Triangle v;
    int ref;
    int parent;
  };
  std::vector<Cell> work;
  work.reserve(idx(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) work.push_back({m.triangle(t), m.refinement_edge(t), t});

  std::vector<Cell> done;
  done.reserve(work.size() * 2);
  while (!work.empty()) {
    Cell c = work.back();
    work.pop_back();
    const int o = c.v[idx(c.ref)];
    const int p = c.v[idx((c.ref + 1) % 3)];
    const int q = c.v[idx((c.ref + 2) % 3)];
    auto it = midpoint.find(edge_key(p, q));
    if (it == midpoint.end()) {
      done.push_back(c);
      continue;
    }
    const int mid = it->second;
    // children keep counterclockwise order; the new vertex is the newest
    // vertex of both, so each child's refinement edge is opposite it
    work.push_back({{o, p, mid}, 2, c.parent});
    work.push_back({{o, mid, q}, 1, c.parent});
  }
  // deterministic ordering: by parent, then by creation order within a parent
  std::stable_sort(done.begin(), done.end(), [](const Cell& a, const Cell& b) { return a.parent < b.parent; });

  std::unordered_map<EdgeKey, BoundaryTag> tags;
  for (int e = 0; e < m.num_edges(); ++e) {
    const BoundaryTag tag = m.edge_tag(e);
    if (tag == BoundaryTag::Interior) continue;
    const auto& ed = m.edge(e);
    auto it = midpoint.find(edge_key(ed[0], ed[1]));
    if (it == midpoint.end()) {
      tags[edge_key(ed[0], ed[1])] = tag;
    } else {
      tags[edge_key(ed[0], it->second)] = tag;
      tags[edge_key(it->second, ed[1])] = tag;
    }
  }
  std::vector<Triangle> triangles;
  std::vector<int> refinement;
  std::vector<int> parent;
  triangles.reserve(done.size());
  for (const Cell& c : done) {
    triangles.push_back(c.v);
    refinement.push_back(c.ref);
    parent.push_back(c.parent);
  }
  Triangulation fine(std::move(vertices), std::move(triangles), tags, std::move(refinement), std::move(parent));
  fine.validate();
  return fine;
}

MeshStats mesh_stats(const Triangulation& m) {
  MeshStats s;
  s.num_vertices = m.num_vertices();
  s.num_edges = m.num_edges();
  s.num_triangles = m.num_triangles();
  s.h_max = 0.0;
  s.h_min = std::numeric_limits<double>::infinity();
  for (int e = 0; e < m.num_edges(); ++e) {
    s.h_max = std::max(s.h_max, m.edge_length(e));
    s.h_min = std::min(s.h_min, m.edge_length(e));
  }
  double min_angle = std::numbers::pi;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const Point& a = m.vertex(tri[idx(i)]);
      const Vec2 u = m.vertex(tri[idx((i + 1) % 3)]) - a;
      const Vec2 w = m.vertex(tri[idx((i + 2) % 3)]) - a;
      min_angle = std::min(min_angle, std::atan2(std::abs(cross(u, w)), dot(u, w)));
    }
  }
  s.min_angle = min_angle * 180.0 / std::numbers::pi;
  return s;
}

std::vector<double> vertex_angle_sums(const Triangulation& m) {
  std::vector<double> sums(idx(m.num_vertices()), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const Point& a = m.vertex(tri[idx(i)]);
      const Vec2 u = m.vertex(tri[idx((i + 1) % 3)]) - a;
      const Vec2 w = m.vertex(tri[idx((i + 2) % 3)]) - a;
      sums[idx(tri[idx(i)])] += std::atan2(std::abs(cross(u, w)), dot(u, w));
    }
  }
  return sums;
}

}  // namespace lsfem
