#pragma once

// Least-squares systems for the first-order form
//   sigma + A grad u = 0,   div sigma + X u = f,   X v = b.grad v + c v,
// with the flux in RT0 or vector P1, the potential in Crouzeix-Raviart and,
// for the three-field method, the intensity phi = -grad u in Nedelec N0.
// Also the nonconforming Galerkin form (A grad_h w, grad_h v) + (X_h w, v).

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lsfem/coefficients.hpp"
#include "lsfem/fespace.hpp"
#include "lsfem/quadrature.hpp"

namespace lsfem {

enum class Method { Div2, DivCurl3, DivCurl2, GalerkinCR };

/// "div2", "divcurl3", "divcurl2", "galerkin-cr".
std::string to_string(Method m);
/// Also accepts "galerkin_cr".
Method parse_method(const std::string& name);

/// Three-field functional variants:
///  J1  |A^-1/2(tau + A grad v)|^2 + |A^-1/2(tau - A psi)|^2 + |curl psi|^2 + |div tau + G v - f|^2
///  J2  |A^1/2(grad v + psi)|^2   + |A^-1/2(tau - A psi)|^2 + ...
///  J3  |A^-1/2(tau + A grad v)|^2 + |A^1/2(grad v + psi)|^2 + ...
/// with G = b.(r grad_h v - s psi - t A^-1 tau) + c v.
enum class DivCurlVariant { J1, J2, J3 };

struct AssemblyOptions {
  DivCurlVariant variant = DivCurlVariant::J1;
  int quad_degree = kAssemblyDegree;
};

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Duplicates are summed in input order, so identical triplet streams give
  /// bitwise identical matrices.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_index() const { return col_; }
  const std::vector<double>& values() const { return values_; }

  double at(int i, int j) const;
  std::vector<double> diagonal() const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// max |a_ij - a_ji| / max |a_ij| (0 for the zero matrix).
  double symmetry_error() const;
  double max_abs() const;
  /// Row-major dense copy.
  std::vector<double> dense() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> values_;
};

struct Block {
  std::string name;
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
};

struct LsSystem {
  Method method = Method::Div2;
  SparseMatrix matrix;
  std::vector<double> rhs;
  /// In dof order: sigma, u, then phi.
  std::vector<Block> blocks;
  /// Space of each block, same order as `blocks`.
  std::vector<SpacePtr> spaces;
  AssemblyOptions options;

  int size() const { return matrix.rows(); }
  const Block& block(const std::string& name) const;
};

/// Discrete unknowns. div2/divcurl2: sigma, u. divcurl3: sigma, u, phi.
/// galerkin-cr: u only. Unused fields have a null space.
struct DiscreteFields {
  Field sigma;
  Field u;
  Field phi;
};

/// Spaces in block order: div2 {RT0_N, CR_D}; divcurl3 {RT0_N, CR_D, N0_D};
/// divcurl2 {P1vec_Sigma, CR_D}; galerkin-cr {CR_D}.
std::vector<SpacePtr> make_spaces(const MeshPtr& mesh, Method m);

LsSystem assemble_div2(const SpacePtr& sigma, const SpacePtr& u, const ProblemSpec& p, const AssemblyOptions& opt = {});
LsSystem assemble_divcurl3(const SpacePtr& sigma, const SpacePtr& phi, const SpacePtr& u, const ProblemSpec& p,
                           const AssemblyOptions& opt = {});
/// Refuses data with discontinuous A and non-convex domains with RestrictionError:
/// the flux space is H1-conforming, which needs a flux in H1.
LsSystem assemble_divcurl2(const SpacePtr& sigma, const SpacePtr& u, const ProblemSpec& p,
                           const AssemblyOptions& opt = {});
LsSystem assemble_galerkin_cr(const SpacePtr& u, const ProblemSpec& p, const AssemblyOptions& opt = {});
LsSystem assemble(Method m, const MeshPtr& mesh, const ProblemSpec& p, const AssemblyOptions& opt = {});

DiscreteFields split_solution(const LsSystem& sys, std::span<const double> x);
/// Inverse of split_solution.
std::vector<double> join_fields(const LsSystem& sys, const DiscreteFields& f);

/// Pointwise arguments of a least-squares functional.
struct SlotValues {
  double v = 0.0;
  Vec2 grad_v{};
  Vec2 tau{};
  double div_tau = 0.0;
  /// d tau_i / d x_j (used by the curl(A^-1 tau) term and H1 flux norms).
  Mat2 jac_tau{};
  Vec2 psi{};
  double curl_psi = 0.0;
};

using SlotFn = std::function<SlotValues(int cell, const Bary& lambda, const Point& x)>;

/// Evaluates the discrete fields (null fields contribute zero).
SlotFn field_slots(const DiscreteFields& f);
/// Exact (sigma, u) with psi = -grad u. jac_tau uses grad_sigma or central differences.
SlotFn exact_slots(const ExactSolution& ex);
SlotFn slots_difference(SlotFn a, SlotFn b);

/// Least-squares functional of `m` (not galerkin-cr) on `mesh`, degree-`quad_degree`
/// quadrature. With f_included=false the data term is dropped, which gives the
/// quadratic form of the assembled matrix. `per_cell`, if given, receives the
/// contribution of each triangle.
double functional_value(Method m, const MeshPtr& mesh, const SlotFn& slots, const ProblemSpec& p, bool f_included,
                        const AssemblyOptions& opt = {}, std::vector<double>* per_cell = nullptr);
double functional_value(Method m, const DiscreteFields& f, const ProblemSpec& p, bool f_included,
                        const AssemblyOptions& opt = {}, std::vector<double>* per_cell = nullptr);

/// x^T B x for the assembled matrix.
double quadratic_form(const LsSystem& sys, std::span<const double> x);

/// Squared |||(tau, v)|||^2 = |grad_h v|^2 + |tau|^2 + |div tau|^2.
double triple_norm_sq(const MeshPtr& mesh, const SlotFn& slots, int quad_degree = kErrorDegree,
                      std::vector<double>* per_cell = nullptr);
double triple_norm_sq(const DiscreteFields& f, int quad_degree = kAssemblyDegree);
double triple_norm(const DiscreteFields& f, int quad_degree = kAssemblyDegree);
/// Squared |tau|^2 + |div tau|^2 + |psi|^2 + |curl psi|^2 + |grad_h v|^2.
double y_norm_sq(const MeshPtr& mesh, const SlotFn& slots, int quad_degree = kErrorDegree);
double y_norm_sq(const DiscreteFields& f, int quad_degree = kAssemblyDegree);

struct ErrorReport {
  double grad_u = 0.0;     ///< |grad_h(u - u_h)|
  double l2_u = 0.0;       ///< |u - u_h|
  double sigma = 0.0;      ///< |sigma - sigma_h|
  double div_sigma = 0.0;  ///< |div(sigma - sigma_h)|
  double phi = 0.0;        ///< |phi - phi_h| (three-field only)
  double curl_phi = 0.0;   ///< |curl(phi - phi_h)| (three-field only)
  double grad_sigma = 0.0; ///< |grad_h(sigma - sigma_h)| (H1 flux seminorm)
  double triple = 0.0;     ///< |||(sigma - sigma_h, u - u_h)|||
  double y_norm = 0.0;     ///< Y-norm of (sigma - sigma_h, phi - phi_h, u - u_h)
  double flux_h1_potential = 0.0;  ///< (|sigma - sigma_h|_1^2 + |grad_h(u - u_h)|^2)^1/2
};

/// Degree-6 errors against p.exact; throws InvalidArgument without exact data.
ErrorReport error_vs_exact(Method m, const DiscreteFields& f, const ProblemSpec& p);

/// Entry i is the bilinear form of the system between the function given by
/// `w` and basis function i, e.g. the error equation with w = exact - discrete.
std::vector<double> form_action(const LsSystem& sys, const ProblemSpec& p, const SlotFn& w, int quad_degree);

/// Gram matrix of the natural norm on the system's unknowns: the triple norm
/// for div2/divcurl2 and the Y norm for divcurl3 (|grad_h v|^2 for galerkin-cr).
SparseMatrix assemble_norm_matrix(const LsSystem& sys, int quad_degree = kAssemblyDegree);

/// Matrix Market coordinate/real/general output.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
/// Dense array output of a vector.
void write_matrix_market(std::ostream& out, std::span<const double> v);

}  // namespace lsfem
