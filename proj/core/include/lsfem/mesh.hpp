#pragma once

// Conforming 2D triangulations with Dirichlet/Neumann boundary tagging,
// uniform red refinement and newest-vertex bisection.
//
// Conventions:
//  - triangles are counterclockwise; local edge i is opposite local vertex i,
//    i.e. it joins vertices (i+1)%3 and (i+2)%3;
//  - a global edge is stored as (lo, hi) with lo < hi; its unit tangent points
//    from lo to hi and its unit normal n_F is the tangent turned clockwise;
//  - edge_sign(K, i) is +1 when n_F is the outward normal of K on that edge.
//    For an interior edge, the triangle with sign +1 is K- and the other K+.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsfem/geometry.hpp"

namespace lsfem {

enum class BoundaryTag : std::uint8_t { Interior, Dirichlet, Neumann };

/// Sides of an axis-aligned rectangle, used as a bit set.
enum class Side : unsigned { Left = 1, Right = 2, Bottom = 4, Top = 8 };

class SideSet {
 public:
  constexpr SideSet() = default;
  constexpr SideSet(std::initializer_list<Side> sides) {
    for (Side s : sides) bits_ |= static_cast<unsigned>(s);
  }
  static constexpr SideSet all() { return {Side::Left, Side::Right, Side::Bottom, Side::Top}; }
  constexpr bool contains(Side s) const { return (bits_ & static_cast<unsigned>(s)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr SideSet& add(Side s) {
    bits_ |= static_cast<unsigned>(s);
    return *this;
  }
  constexpr bool operator==(const SideSet&) const = default;

 private:
  unsigned bits_ = 0;
};

/// Parses "left,right,bottom,top" (or "all"); throws InvalidArgument.
SideSet parse_sides(const std::string& text);
std::string to_string(SideSet sides);

using Triangle = std::array<int, 3>;
using EdgeKey = std::uint64_t;

constexpr EdgeKey edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(a < b ? a : b);
  const auto hi = static_cast<std::uint64_t>(a < b ? b : a);
  return (lo << 32) | hi;
}

class Triangulation {
 public:
  Triangulation() = default;

  /// Builds connectivity. Every boundary edge must appear in `boundary_tags`
  /// (keyed by edge_key); a missing boundary edge means the input is not
  /// conforming and raises InvalidArgument. `refinement_edge` holds one local
  /// edge index per triangle; empty selects the longest edge. `parent` maps
  /// each triangle to the triangle of the previous mesh it was cut from.
  Triangulation(std::vector<Point> vertices, std::vector<Triangle> triangles,
                const std::unordered_map<EdgeKey, BoundaryTag>& boundary_tags,
                std::vector<int> refinement_edge = {}, std::vector<int> parent = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }

  const Point& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
  const std::array<int, 2>& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  /// Global edge index of local edge i of triangle t.
  int triangle_edge(int t, int i) const { return tri_edges_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]; }
  int edge_sign(int t, int i) const { return tri_signs_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]; }
  const std::array<int, 3>& triangle_edges(int t) const { return tri_edges_[static_cast<std::size_t>(t)]; }

  BoundaryTag edge_tag(int e) const { return tags_[static_cast<std::size_t>(e)]; }
  /// {K-, K+} for interior edges; {K, -1} for boundary edges.
  const std::array<int, 2>& edge_triangles(int e) const { return edge_tris_[static_cast<std::size_t>(e)]; }
  /// Local index of edge e inside triangle t (t must contain e).
  int local_edge_index(int t, int e) const;

  double edge_length(int e) const { return h_[static_cast<std::size_t>(e)]; }
  Vec2 edge_tangent(int e) const;
  Vec2 edge_normal(int e) const { return rotate_cw(edge_tangent(e)); }
  Point edge_midpoint(int e) const;
  int refinement_edge(int t) const { return refinement_edge_[static_cast<std::size_t>(t)]; }
  const std::vector<int>& refinement_edges() const { return refinement_edge_; }
  /// Triangle index in the previous mesh of the refinement history (-1 for a root mesh).
  int parent(int t) const { return parent_.empty() ? -1 : parent_[static_cast<std::size_t>(t)]; }

  double area(int t) const;
  Point centroid(int t) const;
  Point map(int t, const Bary& lambda) const;
  /// Barycentric coordinates of x with respect to triangle t.
  Bary barycentric(int t, const Point& x) const;
  /// Gradients of the three barycentric coordinate functions.
  std::array<Vec2, 3> grad_barycentric(int t) const;

  /// true if the vertex lies on a Dirichlet (resp. Neumann) edge.
  bool vertex_on_dirichlet(int v) const { return vertex_dirichlet_[static_cast<std::size_t>(v)] != 0; }
  bool vertex_on_neumann(int v) const { return vertex_neumann_[static_cast<std::size_t>(v)] != 0; }
  /// boundary tag lookup keyed by edge_key, for building refined meshes.
  std::unordered_map<EdgeKey, BoundaryTag> boundary_tag_map() const;

  /// Checks every structural invariant; throws InvalidArgument with a reason.
  void validate() const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 3>> tri_signs_;
  std::vector<BoundaryTag> tags_;
  std::vector<std::array<int, 2>> edge_tris_;
  std::vector<double> h_;
  std::vector<int> refinement_edge_;
  std::vector<int> parent_;
  std::vector<std::uint8_t> vertex_dirichlet_;
  std::vector<std::uint8_t> vertex_neumann_;
};

using MeshPtr = std::shared_ptr<const Triangulation>;

/// Unit square with n x n cells, each split along its (0,0)-(1,1) diagonal.
Triangulation make_structured_square(int n, SideSet dirichlet_sides = SideSet::all());

/// (-1,1)^2 minus [0,1)x(-1,0], n cells per unit length, reentrant corner at the origin.
/// Boundary edges on the listed sides of the bounding box plus the two reentrant
/// edges are Dirichlet when `all_dirichlet`; otherwise only the reentrant edges are.
Triangulation make_lshape(int n, bool all_dirichlet = true);

/// Red refinement: every triangle is split into four congruent children.
Triangulation refine_uniform(const Triangulation& m);

/// Newest-vertex bisection of the marked triangles plus the closure needed
/// to keep the mesh conforming.
Triangulation bisect_marked(const Triangulation& m, std::span<const int> marked);

struct MeshStats {
  int num_vertices = 0;
  int num_edges = 0;
  int num_triangles = 0;
  double h_max = 0.0;
  double h_min = 0.0;
  /// degrees
  double min_angle = 0.0;
};

MeshStats mesh_stats(const Triangulation& m);

/// Interior angle sum (radians) at every vertex.
std::vector<double> vertex_angle_sums(const Triangulation& m);

}  // namespace lsfem
