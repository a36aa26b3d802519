#include "lsfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

enum class Role { Sigma, U, Phi };

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Div2: return "div2";
    case Method::DivCurl3: return "divcurl3";
    case Method::DivCurl2: return "divcurl2";
    case Method::GalerkinCR: return "galerkin-cr";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "div2") return Method::Div2;
  if (name == "divcurl3") return Method::DivCurl3;
  if (name == "divcurl2") return Method::DivCurl2;
  if (name == "galerkin-cr" || name == "galerkin_cr") return Method::GalerkinCR;
  throw InvalidArgument("unknown method '" + name + "' (expected div2, divcurl3, divcurl2 or galerkin-cr)");
}

// ---------------------------------------------------------------------------
// sparse matrix

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  SparseMatrix a;
  a.rows_ = rows;
  a.cols_ = cols;
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw InvalidArgument("SparseMatrix: triplet index out of range");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& x, const Triplet& y) { return x.row != y.row ? x.row < y.row : x.col < y.col; });
  a.row_ptr_.assign(idx(rows) + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const int r = triplets[k].row;
    const int c = triplets[k].col;
    double sum = 0.0;
    for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k) sum += triplets[k].value;
    a.col_.push_back(c);
    a.values_.push_back(sum);
    ++a.row_ptr_[idx(r) + 1];
  }
  for (int r = 0; r < rows; ++r) a.row_ptr_[idx(r) + 1] += a.row_ptr_[idx(r)];
  return a;
}

double SparseMatrix::at(int i, int j) const {
  const auto begin = col_.begin() + row_ptr_[idx(i)];
  const auto end = col_.begin() + row_ptr_[idx(i) + 1];
  const auto it = std::lower_bound(begin, end, j);
  return (it != end && *it == j) ? values_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(idx(std::min(rows_, cols_)), 0.0);
  for (int i = 0; i < static_cast<int>(d.size()); ++i) d[idx(i)] = at(i, i);
  return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_) {
    throw InvalidArgument("SparseMatrix::multiply: size mismatch");
  }
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int k = row_ptr_[idx(i)]; k < row_ptr_[idx(i) + 1]; ++k) s += values_[idx(k)] * x[idx(col_[idx(k)])];
    y[idx(i)] = s;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(idx(rows_));
  multiply(x, y);
  return y;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseMatrix::symmetry_error() const {
  if (rows_ != cols_) return std::numeric_limits<double>::infinity();
  const double scale = max_abs();
  if (scale == 0.0) return 0.0;
  double err = 0.0;
  for (int i = 0; i < rows_; ++i) {
    for (int k = row_ptr_[idx(i)]; k < row_ptr_[idx(i) + 1]; ++k) {
      err = std::max(err, std::abs(values_[idx(k)] - at(col_[idx(k)], i)));
    }
  }
  return err / scale;
}

std::vector<double> SparseMatrix::dense() const {
  std::vector<double> d(idx(rows_) * idx(cols_), 0.0);
  for (int i = 0; i < rows_; ++i) {
    for (int k = row_ptr_[idx(i)]; k < row_ptr_[idx(i) + 1]; ++k) d[idx(i) * idx(cols_) + idx(col_[idx(k)])] = values_[idx(k)];
  }
  return d;
}

const Block& LsSystem::block(const std::string& name) const {
  for (const Block& b : blocks) {
    if (b.name == name) return b;
  }
  throw InvalidArgument("LsSystem: no block named '" + name + "'");
}

// ---------------------------------------------------------------------------
// residual kernels

namespace {

enum class Weight { Ainv, A, One };

// One functional = sum over groups k of (R_k - d_k)^T W_k (R_k - d_k), with R_k
// linear in the slot values and the data d_k = f only in the divergence group.
class Kernel {
 public:
  Kernel(Method m, DivCurlVariant v, const ConvectionWeights& w) : method_(m), variant_(v), w_(w) {
    switch (m) {
      case Method::Div2:
        weights_ = {Weight::Ainv, Weight::One};
        break;
      case Method::DivCurl3:
        if (v == DivCurlVariant::J1) weights_ = {Weight::Ainv, Weight::Ainv, Weight::One, Weight::One};
        if (v == DivCurlVariant::J2) weights_ = {Weight::A, Weight::Ainv, Weight::One, Weight::One};
        if (v == DivCurlVariant::J3) weights_ = {Weight::Ainv, Weight::A, Weight::One, Weight::One};
        break;
      case Method::DivCurl2:
        weights_ = {Weight::Ainv, Weight::One, Weight::One};
        break;
      case Method::GalerkinCR:
        throw InvalidArgument("galerkin-cr has no least-squares functional");
    }
  }

  int groups() const { return static_cast<int>(weights_.size()); }
  int div_group() const { return groups() - 1; }
  bool needs_derivatives() const { return method_ == Method::DivCurl2; }

  void residuals(const PointData& d, const SlotValues& s, Vec2* r) const {
    const Vec2 flux = s.tau + d.A * s.grad_v;
    switch (method_) {
      case Method::Div2:
        r[0] = flux;
        r[1] = {s.div_tau + dot(d.b, s.grad_v) + d.c * s.v, 0.0};
        break;
      case Method::DivCurl3: {
        const Vec2 intensity = s.tau - d.A * s.psi;
        const Vec2 grad_psi = s.grad_v + s.psi;
        if (variant_ == DivCurlVariant::J1) {
          r[0] = flux;
          r[1] = intensity;
        } else if (variant_ == DivCurlVariant::J2) {
          r[0] = grad_psi;
          r[1] = intensity;
        } else {
          r[0] = flux;
          r[1] = grad_psi;
        }
        r[2] = {s.curl_psi, 0.0};
        const Vec2 g = w_.r * s.grad_v - w_.s * s.psi - w_.t * (d.Ainv * s.tau);
        r[3] = {s.div_tau + dot(d.b, g) + d.c * s.v, 0.0};
        break;
      }
      case Method::DivCurl2: {
        // curl(M tau) with M = A^-1
        const Mat2& M = d.Ainv;
        const Mat2& J = s.jac_tau;
        const double curl = d.dAinv_dx.a21 * s.tau.x + d.dAinv_dx.a22 * s.tau.y + M.a21 * J.a11 + M.a22 * J.a21 -
                            (d.dAinv_dy.a11 * s.tau.x + d.dAinv_dy.a12 * s.tau.y + M.a11 * J.a12 + M.a12 * J.a22);
        r[0] = flux;
        r[1] = {curl, 0.0};
        r[2] = {s.div_tau + dot(d.b, s.grad_v) + d.c * s.v, 0.0};
        break;
      }
      case Method::GalerkinCR:
        break;
    }
  }

  double inner(const PointData& d, int k, const Vec2& a, const Vec2& b) const {
    switch (weights_[idx(k)]) {
      case Weight::Ainv: return bilinear(a, d.Ainv, b);
      case Weight::A: return bilinear(a, d.A, b);
      case Weight::One: return a.x * b.x;
    }
    return 0.0;
  }

 private:
  Method method_;
  DivCurlVariant variant_;
  ConvectionWeights w_;
  std::vector<Weight> weights_;
};

constexpr int kMaxGroups = 4;
constexpr int kMaxLocal = 12;

SlotValues to_slots(Role role, const ShapeValue& s) {
  SlotValues out;
  switch (role) {
    case Role::Sigma:
      out.tau = s.vec;
      out.div_tau = s.div;
      out.jac_tau = s.jac;
      break;
    case Role::U:
      out.v = s.value;
      out.grad_v = s.grad;
      break;
    case Role::Phi:
      out.psi = s.vec;
      out.curl_psi = s.curl;
      break;
  }
  return out;
}

std::vector<Role> block_roles(Method m) {
  switch (m) {
    case Method::Div2:
    case Method::DivCurl2: return {Role::Sigma, Role::U};
    case Method::DivCurl3: return {Role::Sigma, Role::U, Role::Phi};
    case Method::GalerkinCR: return {Role::U};
  }
  return {};
}

const char* role_name(Role r) {
  switch (r) {
    case Role::Sigma: return "sigma";
    case Role::U: return "u";
    case Role::Phi: return "phi";
  }
  return "?";
}

void check_spaces(Method m, const std::vector<SpacePtr>& spaces, const std::vector<SpaceKind>& expected) {
  if (spaces.size() != expected.size()) throw InvalidArgument(to_string(m) + ": wrong number of spaces");
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    if (!spaces[i]) throw InvalidArgument(to_string(m) + ": null space");
    if (spaces[i]->kind() != expected[i]) {
      throw InvalidArgument(to_string(m) + ": expected space " + to_string(expected[i]) + ", got " +
                            to_string(spaces[i]->kind()));
    }
    if (&spaces[i]->mesh() != &spaces[0]->mesh()) {
      throw InvalidArgument(to_string(m) + ": spaces are built on different meshes");
    }
  }
}

struct LocalBasis {
  int dof = -1;  // global system index, -1 if constrained
  Role role = Role::U;
};

// Collects the local basis functions of every block on one cell.
int gather_local(const LsSystem& sys, const std::vector<Role>& roles, int cell, std::array<LocalBasis, kMaxLocal>& out) {
  int n = 0;
  for (std::size_t b = 0; b < sys.spaces.size(); ++b) {
    const auto dofs = sys.spaces[b]->cell_dofs(cell);
    for (int d : dofs) out[idx(n++)] = {d >= 0 ? sys.blocks[b].begin + d : -1, roles[b]};
  }
  return n;
}

void eval_local_slots(const LsSystem& sys, const std::vector<Role>& roles, const CellGeometry& g, const Bary& l,
                      std::array<SlotValues, kMaxLocal>& out) {
  int n = 0;
  std::array<ShapeValue, 6> shape;
  for (std::size_t b = 0; b < sys.spaces.size(); ++b) {
    const int nl = sys.spaces[b]->local_count();
    std::span<ShapeValue> local(shape.data(), idx(nl));
    eval_local_basis(sys.spaces[b]->kind(), g, l, local);
    for (int i = 0; i < nl; ++i) out[idx(n++)] = to_slots(roles[b], local[idx(i)]);
  }
}

LsSystem make_empty_system(Method m, std::vector<SpacePtr> spaces, const AssemblyOptions& opt) {
  LsSystem sys;
  sys.method = m;
  sys.options = opt;
  const auto roles = block_roles(m);
  int offset = 0;
  for (std::size_t b = 0; b < spaces.size(); ++b) {
    sys.blocks.push_back({role_name(roles[b]), offset, offset + spaces[b]->dof_count()});
    offset += spaces[b]->dof_count();
  }
  sys.spaces = std::move(spaces);
  sys.rhs.assign(idx(offset), 0.0);
  return sys;
}

LsSystem assemble_ls(Method m, std::vector<SpacePtr> spaces, const ProblemSpec& p, const AssemblyOptions& opt) {
  p.validate();
  LsSystem sys = make_empty_system(m, std::move(spaces), opt);
  const Kernel kernel(m, opt.variant, p.weights);
  const auto roles = block_roles(m);
  const Triangulation& mesh = sys.spaces[0]->mesh();
  const TriangleRule& rule = triangle_rule(opt.quad_degree);
  const int ng = kernel.groups();

  std::vector<Triplet> triplets;
  triplets.reserve(idx(mesh.num_triangles()) * 100);
  std::array<LocalBasis, kMaxLocal> basis;
  std::array<SlotValues, kMaxLocal> slots;
  std::array<std::array<Vec2, kMaxGroups>, kMaxLocal> res;
  std::array<double, kMaxLocal * kMaxLocal> local_matrix;
  std::array<double, kMaxLocal> local_rhs;

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const CellGeometry g = cell_geometry(mesh, t);
    const int n = gather_local(sys, roles, t, basis);
    std::fill(local_matrix.begin(), local_matrix.end(), 0.0);
    std::fill(local_rhs.begin(), local_rhs.end(), 0.0);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Bary& l = rule.points[q];
      const PointData d = eval_point(p, g.map(l), kernel.needs_derivatives());
      const double w = 2.0 * g.area * rule.weights[q];
      eval_local_slots(sys, roles, g, l, slots);
      for (int a = 0; a < n; ++a) kernel.residuals(d, slots[idx(a)], res[idx(a)].data());
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          double s = 0.0;
          for (int k = 0; k < ng; ++k) s += kernel.inner(d, k, res[idx(a)][idx(k)], res[idx(b)][idx(k)]);
          local_matrix[idx(a * kMaxLocal + b)] += w * s;
        }
        local_rhs[idx(a)] += w * d.f * res[idx(a)][idx(kernel.div_group())].x;
      }
    }
    for (int a = 0; a < n; ++a) {
      const int ra = basis[idx(a)].dof;
      if (ra < 0) continue;
      sys.rhs[idx(ra)] += local_rhs[idx(a)];
      for (int b = 0; b < n; ++b) {
        const int rb = basis[idx(b)].dof;
        if (rb < 0) continue;
        const double v = a <= b ? local_matrix[idx(a * kMaxLocal + b)] : local_matrix[idx(b * kMaxLocal + a)];
        triplets.push_back({ra, rb, v});
      }
    }
  }
  sys.matrix = SparseMatrix::from_triplets(static_cast<int>(sys.rhs.size()), static_cast<int>(sys.rhs.size()), std::move(triplets));
  return sys;
}

}  // namespace

std::vector<SpacePtr> make_spaces(const MeshPtr& mesh, Method m) {
  switch (m) {
    case Method::Div2:
      return {build_space(mesh, SpaceKind::RT0_N), build_space(mesh, SpaceKind::CR_D)};
    case Method::DivCurl3:
      return {build_space(mesh, SpaceKind::RT0_N), build_space(mesh, SpaceKind::CR_D),
              build_space(mesh, SpaceKind::N0_D)};
    case Method::DivCurl2:
      return {build_space(mesh, SpaceKind::P1vec_Sigma), build_space(mesh, SpaceKind::CR_D)};
    case Method::GalerkinCR:
      return {build_space(mesh, SpaceKind::CR_D)};
  }
  return {};
}

LsSystem assemble_div2(const SpacePtr& sigma, const SpacePtr& u, const ProblemSpec& p, const AssemblyOptions& opt) {
  std::vector<SpacePtr> spaces{sigma, u};
  // the unconstrained RT0 space is accepted as well (used for compatibility checks)
  const SpaceKind flux_kind = sigma && sigma->kind() == SpaceKind::RT0 ? SpaceKind::RT0 : SpaceKind::RT0_N;
  check_spaces(Method::Div2, spaces, {flux_kind, SpaceKind::CR_D});
  return assemble_ls(Method::Div2, std::move(spaces), p, opt);
}

LsSystem assemble_divcurl3(const SpacePtr& sigma, const SpacePtr& phi, const SpacePtr& u, const ProblemSpec& p,
                           const AssemblyOptions& opt) {
  std::vector<SpacePtr> spaces{sigma, u, phi};
  const SpaceKind flux_kind = sigma && sigma->kind() == SpaceKind::RT0 ? SpaceKind::RT0 : SpaceKind::RT0_N;
  check_spaces(Method::DivCurl3, spaces, {flux_kind, SpaceKind::CR_D, SpaceKind::N0_D});
  return assemble_ls(Method::DivCurl3, std::move(spaces), p, opt);
}

LsSystem assemble_divcurl2(const SpacePtr& sigma, const SpacePtr& u, const ProblemSpec& p, const AssemblyOptions& opt) {
  std::vector<SpacePtr> spaces{sigma, u};
  check_spaces(Method::DivCurl2, spaces, {SpaceKind::P1vec_Sigma, SpaceKind::CR_D});
  if (p.A_discontinuous) {
    throw RestrictionError("divcurl2: problem '" + p.name +
                           "' has a discontinuous diffusion coefficient; the H1-conforming flux space needs "
                           "sigma in H1 (smooth A on a convex domain), which fails across coefficient jumps");
  }
  if (p.domain == Domain::LShape) {
    throw RestrictionError("divcurl2: problem '" + p.name +
                           "' lives on a non-convex domain; the H1-conforming flux space needs sigma in H1 "
                           "(smooth A on a convex domain)");
  }
  // the tangential constraint on Dirichlet edges is t.sigma = 0, valid when A is diagonal there
  const Triangulation& m = u->mesh();
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.edge_tag(e) != BoundaryTag::Dirichlet) continue;
    const Mat2 A = p.A(m.edge_midpoint(e));
    if (std::abs(A.a12) > 1e-12 * std::max(std::abs(A.a11), std::abs(A.a22))) {
      throw RestrictionError("divcurl2: diffusion matrix is not diagonal on the Dirichlet boundary (edge " +
                             std::to_string(e) + "); the tangential flux constraint cannot be imposed dof-wise");
    }
  }
  return assemble_ls(Method::DivCurl2, std::move(spaces), p, opt);
}

LsSystem assemble_galerkin_cr(const SpacePtr& u, const ProblemSpec& p, const AssemblyOptions& opt) {
  std::vector<SpacePtr> spaces{u};
  check_spaces(Method::GalerkinCR, spaces, {SpaceKind::CR_D});
  p.validate();
  LsSystem sys = make_empty_system(Method::GalerkinCR, spaces, opt);
  const Triangulation& mesh = u->mesh();
  const TriangleRule& rule = triangle_rule(opt.quad_degree);
  std::vector<Triplet> triplets;
  std::array<ShapeValue, 3> shape;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const CellGeometry g = cell_geometry(mesh, t);
    const auto dofs = u->cell_dofs(t);
    std::array<double, 9> km{};
    std::array<double, 3> fm{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Bary& l = rule.points[q];
      const PointData d = eval_point(p, g.map(l));
      const double w = 2.0 * g.area * rule.weights[q];
      eval_local_basis(SpaceKind::CR_D, g, l, shape);
      for (int i = 0; i < 3; ++i) {
        const ShapeValue& test = shape[idx(i)];
        fm[idx(i)] += w * d.f * test.value;
        for (int j = 0; j < 3; ++j) {
          const ShapeValue& trial = shape[idx(j)];
          km[idx(3 * i + j)] +=
              w * (bilinear(test.grad, d.A, trial.grad) + (dot(d.b, trial.grad) + d.c * trial.value) * test.value);
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      if (dofs[idx(i)] < 0) continue;
      sys.rhs[idx(dofs[idx(i)])] += fm[idx(i)];
      for (int j = 0; j < 3; ++j) {
        if (dofs[idx(j)] >= 0) triplets.push_back({dofs[idx(i)], dofs[idx(j)], km[idx(3 * i + j)]});
      }
    }
  }
  sys.matrix = SparseMatrix::from_triplets(static_cast<int>(sys.rhs.size()), static_cast<int>(sys.rhs.size()), std::move(triplets));
  return sys;
}

LsSystem assemble(Method m, const MeshPtr& mesh, const ProblemSpec& p, const AssemblyOptions& opt) {
  const auto s = make_spaces(mesh, m);
  switch (m) {
    case Method::Div2: return assemble_div2(s[0], s[1], p, opt);
    case Method::DivCurl3: return assemble_divcurl3(s[0], s[2], s[1], p, opt);
    case Method::DivCurl2: return assemble_divcurl2(s[0], s[1], p, opt);
    case Method::GalerkinCR: return assemble_galerkin_cr(s[0], p, opt);
  }
  throw InvalidArgument("assemble: unknown method");
}

DiscreteFields split_solution(const LsSystem& sys, std::span<const double> x) {
  if (static_cast<int>(x.size()) != sys.size()) throw InvalidArgument("split_solution: vector size mismatch");
  DiscreteFields f;
  for (std::size_t b = 0; b < sys.blocks.size(); ++b) {
    const Block& blk = sys.blocks[b];
    Field field(sys.spaces[b], std::vector<double>(x.begin() + blk.begin, x.begin() + blk.end));
    if (blk.name == "sigma") f.sigma = std::move(field);
    if (blk.name == "u") f.u = std::move(field);
    if (blk.name == "phi") f.phi = std::move(field);
  }
  return f;
}

std::vector<double> join_fields(const LsSystem& sys, const DiscreteFields& f) {
  std::vector<double> x(idx(sys.size()), 0.0);
  for (const Block& blk : sys.blocks) {
    const Field& field = blk.name == "sigma" ? f.sigma : blk.name == "u" ? f.u : f.phi;
    if (static_cast<int>(field.coeffs.size()) != blk.size()) {
      throw InvalidArgument("join_fields: field '" + blk.name + "' has the wrong size");
    }
    std::copy(field.coeffs.begin(), field.coeffs.end(), x.begin() + blk.begin);
  }
  return x;
}

// ---------------------------------------------------------------------------
// functionals and norms

SlotFn field_slots(const DiscreteFields& f) {
  return [f](int cell, const Bary& l, const Point&) {
    SlotValues s;
    if (f.sigma.space) {
      const ShapeValue v = eval_field(f.sigma, cell, l);
      s.tau = v.vec;
      s.div_tau = v.div;
      s.jac_tau = v.jac;
    }
    if (f.u.space) {
      const ShapeValue v = eval_field(f.u, cell, l);
      s.v = v.value;
      s.grad_v = v.grad;
    }
    if (f.phi.space) {
      const ShapeValue v = eval_field(f.phi, cell, l);
      s.psi = v.vec;
      s.curl_psi = v.curl;
    }
    return s;
  };
}

SlotFn exact_slots(const ExactSolution& ex) {
  return [ex](int, const Bary&, const Point& x) {
    SlotValues s;
    s.v = ex.u(x);
    s.grad_v = ex.grad_u(x);
    s.tau = ex.sigma(x);
    s.div_tau = ex.div_sigma(x);
    if (ex.grad_sigma) {
      s.jac_tau = ex.grad_sigma(x);
    } else {
      const double h = 1e-6;
      const Vec2 dx = (1.0 / (2.0 * h)) * (ex.sigma({x.x + h, x.y}) - ex.sigma({x.x - h, x.y}));
      const Vec2 dy = (1.0 / (2.0 * h)) * (ex.sigma({x.x, x.y + h}) - ex.sigma({x.x, x.y - h}));
      s.jac_tau = {dx.x, dy.x, dx.y, dy.y};
    }
    s.psi = -s.grad_v;
    s.curl_psi = 0.0;
    return s;
  };
}

SlotFn slots_difference(SlotFn a, SlotFn b) {
  return [a = std::move(a), b = std::move(b)](int cell, const Bary& l, const Point& x) {
    const SlotValues p = a(cell, l, x);
    const SlotValues q = b(cell, l, x);
    SlotValues s;
    s.v = p.v - q.v;
    s.grad_v = p.grad_v - q.grad_v;
    s.tau = p.tau - q.tau;
    s.div_tau = p.div_tau - q.div_tau;
    s.jac_tau = p.jac_tau - q.jac_tau;
    s.psi = p.psi - q.psi;
    s.curl_psi = p.curl_psi - q.curl_psi;
    return s;
  };
}

double functional_value(Method m, const MeshPtr& mesh, const SlotFn& slots, const ProblemSpec& p, bool f_included,
                        const AssemblyOptions& opt, std::vector<double>* per_cell) {
  const Kernel kernel(m, opt.variant, p.weights);
  const TriangleRule& rule = triangle_rule(opt.quad_degree);
  if (per_cell) per_cell->assign(idx(mesh->num_triangles()), 0.0);
  std::array<Vec2, kMaxGroups> r;
  double total = 0.0;
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const double area = mesh->area(t);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Bary& l = rule.points[q];
      const Point x = mesh->map(t, l);
      const PointData d = eval_point(p, x, kernel.needs_derivatives());
      kernel.residuals(d, slots(t, l, x), r.data());
      if (f_included) r[idx(kernel.div_group())].x -= d.f;
      double s = 0.0;
      for (int k = 0; k < kernel.groups(); ++k) s += kernel.inner(d, k, r[idx(k)], r[idx(k)]);
      cell_sum += 2.0 * area * rule.weights[q] * s;
    }
    if (per_cell) (*per_cell)[idx(t)] = cell_sum;
    total += cell_sum;
  }
  return total;
}

namespace {

void check_arity(Method m, const DiscreteFields& f) {
  const bool needs_phi = m == Method::DivCurl3;
  if (!f.sigma.space || !f.u.space || needs_phi != static_cast<bool>(f.phi.space)) {
    throw InvalidArgument("functional_value: fields do not match the arity of method " + to_string(m));
  }
}

}  // namespace

double functional_value(Method m, const DiscreteFields& f, const ProblemSpec& p, bool f_included,
                        const AssemblyOptions& opt, std::vector<double>* per_cell) {
  check_arity(m, f);
  return functional_value(m, f.u.space->mesh_ptr(), field_slots(f), p, f_included, opt, per_cell);
}

double quadratic_form(const LsSystem& sys, std::span<const double> x) {
  const auto y = sys.matrix.multiply(x);
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

namespace {

template <class Integrand>
double integrate(const MeshPtr& mesh, const SlotFn& slots, int degree, Integrand&& g, std::vector<double>* per_cell) {
  const TriangleRule& rule = triangle_rule(degree);
  if (per_cell) per_cell->assign(idx(mesh->num_triangles()), 0.0);
  double total = 0.0;
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const double area = mesh->area(t);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Bary& l = rule.points[q];
      const Point x = mesh->map(t, l);
      cell_sum += 2.0 * area * rule.weights[q] * g(slots(t, l, x));
    }
    if (per_cell) (*per_cell)[idx(t)] = cell_sum;
    total += cell_sum;
  }
  return total;
}

const MeshPtr& fields_mesh(const DiscreteFields& f) {
  if (f.u.space) return f.u.space->mesh_ptr();
  if (f.sigma.space) return f.sigma.space->mesh_ptr();
  if (f.phi.space) return f.phi.space->mesh_ptr();
  throw InvalidArgument("norm of an empty field set");
}

double frobenius_sq(const Mat2& m) { return m.a11 * m.a11 + m.a12 * m.a12 + m.a21 * m.a21 + m.a22 * m.a22; }

}  // namespace

double triple_norm_sq(const MeshPtr& mesh, const SlotFn& slots, int quad_degree, std::vector<double>* per_cell) {
  return integrate(
      mesh, slots, quad_degree,
      [](const SlotValues& s) { return dot(s.grad_v, s.grad_v) + dot(s.tau, s.tau) + s.div_tau * s.div_tau; },
      per_cell);
}

double triple_norm_sq(const DiscreteFields& f, int quad_degree) {
  return triple_norm_sq(fields_mesh(f), field_slots(f), quad_degree);
}

double triple_norm(const DiscreteFields& f, int quad_degree) { return std::sqrt(triple_norm_sq(f, quad_degree)); }

double y_norm_sq(const MeshPtr& mesh, const SlotFn& slots, int quad_degree) {
  return integrate(
      mesh, slots, quad_degree,
      [](const SlotValues& s) {
        return dot(s.tau, s.tau) + s.div_tau * s.div_tau + dot(s.psi, s.psi) + s.curl_psi * s.curl_psi +
               dot(s.grad_v, s.grad_v);
      },
      nullptr);
}

double y_norm_sq(const DiscreteFields& f, int quad_degree) { return y_norm_sq(fields_mesh(f), field_slots(f), quad_degree); }

ErrorReport error_vs_exact(Method m, const DiscreteFields& f, const ProblemSpec& p) {
  if (!p.exact) throw InvalidArgument("error_vs_exact: problem '" + p.name + "' has no exact solution");
  const MeshPtr& mesh = fields_mesh(f);
  const SlotFn e = slots_difference(exact_slots(*p.exact), field_slots(f));
  const TriangleRule& rule = triangle_rule(kErrorDegree);
  const bool has_flux = static_cast<bool>(f.sigma.space);
  const bool has_phi = static_cast<bool>(f.phi.space);
  std::array<double, 7> acc{};
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const double area = mesh->area(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Bary& l = rule.points[q];
      const SlotValues s = e(t, l, mesh->map(t, l));
      const double w = 2.0 * area * rule.weights[q];
      acc[0] += w * dot(s.grad_v, s.grad_v);
      acc[1] += w * s.v * s.v;
      acc[2] += w * dot(s.tau, s.tau);
      acc[3] += w * s.div_tau * s.div_tau;
      acc[4] += w * dot(s.psi, s.psi);
      acc[5] += w * s.curl_psi * s.curl_psi;
      acc[6] += w * frobenius_sq(s.jac_tau);
    }
  }
  ErrorReport r;
  r.grad_u = std::sqrt(acc[0]);
  r.l2_u = std::sqrt(acc[1]);
  if (has_flux) {
    r.sigma = std::sqrt(acc[2]);
    r.div_sigma = std::sqrt(acc[3]);
    r.grad_sigma = std::sqrt(acc[6]);
    r.triple = std::sqrt(acc[0] + acc[2] + acc[3]);
    r.flux_h1_potential = std::sqrt(acc[2] + acc[6] + acc[0]);
  }
  if (has_phi) {
    r.phi = std::sqrt(acc[4]);
    r.curl_phi = std::sqrt(acc[5]);
    r.y_norm = std::sqrt(acc[2] + acc[3] + acc[4] + acc[5] + acc[0]);
  }
  (void)m;
  return r;
}

std::vector<double> form_action(const LsSystem& sys, const ProblemSpec& p, const SlotFn& w, int quad_degree) {
  const Kernel kernel(sys.method, sys.options.variant, p.weights);
  const auto roles = block_roles(sys.method);
  const Triangulation& mesh = sys.spaces[0]->mesh();
  const TriangleRule& rule = triangle_rule(quad_degree);
  std::vector<double> out(idx(sys.size()), 0.0);
  std::array<LocalBasis, kMaxLocal> basis;
  std::array<SlotValues, kMaxLocal> slots;
  std::array<Vec2, kMaxGroups> rw;
  std::array<Vec2, kMaxGroups> ra;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const CellGeometry g = cell_geometry(mesh, t);
    const int n = gather_local(sys, roles, t, basis);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Bary& l = rule.points[q];
      const Point x = g.map(l);
      const PointData d = eval_point(p, x, kernel.needs_derivatives());
      const double wq = 2.0 * g.area * rule.weights[q];
      kernel.residuals(d, w(t, l, x), rw.data());
      eval_local_slots(sys, roles, g, l, slots);
      for (int a = 0; a < n; ++a) {
        if (basis[idx(a)].dof < 0) continue;
        kernel.residuals(d, slots[idx(a)], ra.data());
        double s = 0.0;
        for (int k = 0; k < kernel.groups(); ++k) s += kernel.inner(d, k, rw[idx(k)], ra[idx(k)]);
        out[idx(basis[idx(a)].dof)] += wq * s;
      }
    }
  }
  return out;
}

SparseMatrix assemble_norm_matrix(const LsSystem& sys, int quad_degree) {
  const auto roles = block_roles(sys.method);
  const Triangulation& mesh = sys.spaces[0]->mesh();
  const TriangleRule& rule = triangle_rule(quad_degree);
  const bool y_norm = sys.method == Method::DivCurl3;
  auto inner = [y_norm](const SlotValues& a, const SlotValues& b) {
    double s = dot(a.grad_v, b.grad_v) + dot(a.tau, b.tau) + a.div_tau * b.div_tau;
    if (y_norm) s += dot(a.psi, b.psi) + a.curl_psi * b.curl_psi;
    return s;
  };
  std::vector<Triplet> triplets;
  std::array<LocalBasis, kMaxLocal> basis;
  std::array<SlotValues, kMaxLocal> slots;
  std::array<double, kMaxLocal * kMaxLocal> local_matrix;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const CellGeometry g = cell_geometry(mesh, t);
    const int n = gather_local(sys, roles, t, basis);
    std::fill(local_matrix.begin(), local_matrix.end(), 0.0);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      eval_local_slots(sys, roles, g, rule.points[q], slots);
      const double w = 2.0 * g.area * rule.weights[q];
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) local_matrix[idx(a * kMaxLocal + b)] += w * inner(slots[idx(a)], slots[idx(b)]);
      }
    }
    for (int a = 0; a < n; ++a) {
      if (basis[idx(a)].dof < 0) continue;
      for (int b = 0; b < n; ++b) {
        if (basis[idx(b)].dof < 0) continue;
        const double v = a <= b ? local_matrix[idx(a * kMaxLocal + b)] : local_matrix[idx(b * kMaxLocal + a)];
        triplets.push_back({basis[idx(a)].dof, basis[idx(b)].dof, v});
      }
    }
  }
  return SparseMatrix::from_triplets(static_cast<int>(sys.rhs.size()), static_cast<int>(sys.rhs.size()), std::move(triplets));
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  char buf[64];
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = a.row_ptr()[idx(i)]; k < a.row_ptr()[idx(i) + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i + 1, a.col_index()[idx(k)] + 1, a.values()[idx(k)]);
      out << buf;
    }
  }
}

void write_matrix_market(std::ostream& out, std::span<const double> v) {
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    out << buf;
  }
}

}  // namespace lsfem
