#pragma once

// PDE data for  -div(A grad u) + b.grad u + c u = f  with homogeneous
// Dirichlet data on Gamma_D and homogeneous conormal data on Gamma_N,
// plus scalar coefficient expressions for config-driven problems.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "lsfem/fespace.hpp"
#include "lsfem/geometry.hpp"
#include "lsfem/mesh.hpp"

namespace lsfem {

/// Parsed scalar expression over x, y. Grammar (loosest to tightest):
///   + -  (left)   * /  (left)   unary -   ^ (right)
/// with numbers, x, y, pi and sin cos exp sqrt abs.
class Expr {
 public:
  struct Node;

  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  double eval(double x, double y) const;
  double eval(const Point& p) const { return eval(p.x, p.y); }
  /// Fully parenthesized form; parse(to_string()) reproduces the same tree.
  std::string to_string() const;
  bool empty() const { return root_ == nullptr; }

 private:
  std::shared_ptr<const Node> root_;
};

/// Throws ParseError (with byte offset) on syntax errors and unknown identifiers.
Expr parse_expr(std::string_view src);

/// Declared by the user; never verified.
enum class Regime { Coercive, General };
std::string to_string(Regime r);

/// Weights (r, s, t) of  b.(r grad_h v - s psi - t A^{-1} tau) + c v.
struct ConvectionWeights {
  double r = 1.0;
  double s = 0.0;
  double t = 0.0;
};

enum class Domain { UnitSquare, LShape };

struct ExactSolution {
  ScalarFn u;
  VectorFn grad_u;
  VectorFn sigma;
  ScalarFn div_sigma;
  /// d sigma_i / d x_j; may be empty (then finite differences of sigma are used).
  MatrixFn grad_sigma;
};

struct ProblemSpec {
  std::string name;
  MatrixFn A;
  VectorFn b;
  ScalarFn c;
  ScalarFn f;
  /// A has jumps (the flux is then not H1 in general).
  bool A_discontinuous = false;
  /// b is identically zero.
  bool convection_free = true;
  std::optional<ExactSolution> exact;
  Regime regime_hint = Regime::Coercive;
  ConvectionWeights weights;
  Domain domain = Domain::UnitSquare;
  SideSet dirichlet_sides = SideSet::all();

  /// Throws InvalidArgument when the convection weights are not a convex combination.
  void validate() const;
};

/// Coefficient values at one point, as used by the assembly kernels.
struct PointData {
  Mat2 A;
  Mat2 Ainv;
  Vec2 b;
  double c = 0.0;
  double f = 0.0;
  /// Partial derivatives of A^{-1} (only filled on request).
  Mat2 dAinv_dx;
  Mat2 dAinv_dy;
};

/// Throws DataError naming the point when A is not symmetric positive definite.
PointData eval_point(const ProblemSpec& p, const Point& x, bool with_derivatives = false);

enum class Coeff { A, b, c, f };
using CoeffValue = std::variant<Mat2, Vec2, double>;
CoeffValue eval_coeff(const ProblemSpec& p, Coeff which, const Point& x);

using ProblemParams = std::map<std::string, double>;

/// Presets: poisson-sine, convection (beta1, beta2), helmholtz-indefinite (kappa2),
/// lshape-singular, jump-diffusion (a_left, a_right), linear-x.
ProblemSpec builtin_problem(const std::string& name, const ProblemParams& params = {});
std::vector<std::string> builtin_problem_names();

/// Singular factor r^{2/3} sin(2 theta / 3) of the L-shape benchmark,
/// with theta in [0, 2 pi).
double lshape_singular_factor(const Point& x);

/// Max over the points of |div sigma + b.grad u + c u - f| and |A grad u + sigma|.
double exact_residual(const ProblemSpec& p, std::span<const Point> points);

}  // namespace lsfem
