#include "lsfem/coefficients.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "lsfem/errors.hpp"

namespace lsfem {

// ---------------------------------------------------------------------------
// expressions

enum class Func { Sin, Cos, Exp, Sqrt, Abs };

struct Expr::Node {
  enum class Kind { Number, X, Y, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Number;
  double value = 0.0;
  Func fn = Func::Sin;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Kind = Expr::Node::Kind;

const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
  }
  return "?";
}

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->value = v;
  return n;
}

double eval_node(const Expr::Node& n, double x, double y) {
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::X: return x;
    case Kind::Y: return y;
    case Kind::Neg: return -eval_node(*n.lhs, x, y);
    case Kind::Add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
    case Kind::Sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
    case Kind::Mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
    case Kind::Div: return eval_node(*n.lhs, x, y) / eval_node(*n.rhs, x, y);
    case Kind::Pow: return std::pow(eval_node(*n.lhs, x, y), eval_node(*n.rhs, x, y));
    case Kind::Call: {
      const double a = eval_node(*n.lhs, x, y);
      switch (n.fn) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Sqrt: return std::sqrt(a);
        case Func::Abs: return std::abs(a);
      }
    }
  }
  return 0.0;
}

void print_node(const Expr::Node& n, std::string& out) {
  auto binary = [&](const char* op) {
    out += '(';
    print_node(*n.lhs, out);
    out += op;
    print_node(*n.rhs, out);
    out += ')';
  };
  switch (n.kind) {
    case Kind::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      break;
    }
    case Kind::X: out += 'x'; break;
    case Kind::Y: out += 'y'; break;
    case Kind::Neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      break;
    case Kind::Add: binary("+"); break;
    case Kind::Sub: binary("-"); break;
    case Kind::Mul: binary("*"); break;
    case Kind::Div: binary("/"); break;
    case Kind::Pow: binary("^"); break;
    case Kind::Call:
      out += func_name(n.fn);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      break;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = make(Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = make(Kind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Kind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    // right associative: the exponent may itself be a (signed) power
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return number(v);
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return make(Kind::X);
    if (name == "y") return make(Kind::Y);
    if (name == "pi") return number(std::numbers::pi);
    static constexpr std::pair<std::string_view, Func> funcs[] = {
        {"sin", Func::Sin}, {"cos", Func::Cos}, {"exp", Func::Exp}, {"sqrt", Func::Sqrt}, {"abs", Func::Abs}};
    for (const auto& [fname, fn] : funcs) {
      if (name != fname) continue;
      if (!accept('(')) throw ParseError("expected '(' after " + std::string(name), pos_);
      auto n = std::make_shared<Expr::Node>();
      n->kind = Kind::Call;
      n->fn = fn;
      n->lhs = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return n;
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

double Expr::eval(double x, double y) const {
  if (!root_) throw InvalidArgument("evaluating an empty expression");
  return eval_node(*root_, x, y);
}

std::string Expr::to_string() const {
  std::string out;
  if (root_) print_node(*root_, out);
  return out;
}

Expr parse_expr(std::string_view src) { return Expr(Parser(src).parse()); }

// ---------------------------------------------------------------------------
// problem data

std::string to_string(Regime r) { return r == Regime::Coercive ? "coercive" : "general"; }

void ProblemSpec::validate() const {
  const auto& w = weights;
  const bool in_range = w.r >= 0.0 && w.r <= 1.0 && w.s >= 0.0 && w.s <= 1.0 && w.t >= 0.0 && w.t <= 1.0;
  if (!in_range || std::abs(w.r + w.s + w.t - 1.0) > 1e-12) {
    throw InvalidArgument("convection weights (r,s,t) must lie in [0,1] and sum to 1");
  }
  if (!A || !b || !c || !f) throw InvalidArgument("problem '" + name + "' is missing coefficient callbacks");
  if (dirichlet_sides.empty()) throw InvalidArgument("problem '" + name + "' has an empty Dirichlet boundary");
}

namespace {

void check_spd(const Mat2& A, const Point& x) {
  const double scale = std::max({std::abs(A.a11), std::abs(A.a22), std::abs(A.a12), std::abs(A.a21)});
  const auto ev = sym_eigenvalues(A);
  if (!(std::abs(A.a12 - A.a21) <= 1e-12 * scale) || !(ev[0] > 0.0)) {
    std::ostringstream msg;
    msg << "diffusion coefficient is not symmetric positive definite at (" << x.x << ", " << x.y << ")";
    throw DataError(msg.str());
  }
}

}  // namespace

PointData eval_point(const ProblemSpec& p, const Point& x, bool with_derivatives) {
  PointData d;
  d.A = p.A(x);
  check_spd(d.A, x);
  d.Ainv = d.A.inverse();
  d.b = p.b(x);
  d.c = p.c(x);
  d.f = p.f(x);
  if (with_derivatives) {
    // central differences; only used for smooth A
    const double h = 1e-5;
    d.dAinv_dx = (1.0 / (2.0 * h)) * (p.A({x.x + h, x.y}).inverse() - p.A({x.x - h, x.y}).inverse());
    d.dAinv_dy = (1.0 / (2.0 * h)) * (p.A({x.x, x.y + h}).inverse() - p.A({x.x, x.y - h}).inverse());
  }
  return d;
}

CoeffValue eval_coeff(const ProblemSpec& p, Coeff which, const Point& x) {
  switch (which) {
    case Coeff::A: {
      const Mat2 A = p.A(x);
      check_spd(A, x);
      return A;
    }
    case Coeff::b: return p.b(x);
    case Coeff::c: return p.c(x);
    case Coeff::f: return p.f(x);
  }
  throw InvalidArgument("eval_coeff: unknown coefficient");
}

double lshape_singular_factor(const Point& x) {
  const double r = std::hypot(x.x, x.y);
  if (r == 0.0) return 0.0;
  double theta = std::atan2(x.y, x.x);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * theta / 3.0);
}

namespace {

double param(const ProblemParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

constexpr double kPi = std::numbers::pi;

// u = sin(pi x) sin(pi y)
double sine_u(const Point& x) { return std::sin(kPi * x.x) * std::sin(kPi * x.y); }
Vec2 sine_grad(const Point& x) {
  return {kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y), kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y)};
}
Mat2 sine_hessian(const Point& x) {
  const double ss = std::sin(kPi * x.x) * std::sin(kPi * x.y);
  const double cc = std::cos(kPi * x.x) * std::cos(kPi * x.y);
  return {-kPi * kPi * ss, kPi * kPi * cc, kPi * kPi * cc, -kPi * kPi * ss};
}

ProblemSpec sine_problem(std::string name, Vec2 beta, double reaction) {
  ProblemSpec p;
  p.name = std::move(name);
  p.A = [](const Point&) { return Mat2::identity(); };
  p.b = [beta](const Point&) { return beta; };
  p.c = [reaction](const Point&) { return reaction; };
  p.f = [beta, reaction](const Point& x) {
    return 2.0 * kPi * kPi * sine_u(x) + dot(beta, sine_grad(x)) + reaction * sine_u(x);
  };
  p.convection_free = beta.x == 0.0 && beta.y == 0.0;
  ExactSolution ex;
  ex.u = sine_u;
  ex.grad_u = sine_grad;
  ex.sigma = [](const Point& x) { return -sine_grad(x); };
  ex.div_sigma = [](const Point& x) { return 2.0 * kPi * kPi * sine_u(x); };
  ex.grad_sigma = [](const Point& x) { return -1.0 * sine_hessian(x); };
  p.exact = ex;
  return p;
}

}  // namespace

std::vector<std::string> builtin_problem_names() {
  return {"poisson-sine", "convection", "helmholtz-indefinite", "lshape-singular", "jump-diffusion", "linear-x"};
}

ProblemSpec builtin_problem(const std::string& name, const ProblemParams& params) {
  if (name == "poisson-sine") return sine_problem(name, {0.0, 0.0}, 0.0);

  if (name == "convection") {
    const Vec2 beta{param(params, "beta1", 1.0), param(params, "beta2", 0.0)};
    ProblemSpec p = sine_problem(name, beta, 0.0);
    // constant b: div b = 0 and c = 0, so the standard form stays coercive
    p.regime_hint = Regime::Coercive;
    return p;
  }

  if (name == "helmholtz-indefinite") {
    const double kappa2 = param(params, "kappa2", 30.0);
    // Dirichlet eigenvalues of the unit square are pi^2 (m^2 + n^2)
    for (int m = 1; m * m * kPi * kPi <= kappa2 + 1.0; ++m) {
      for (int n = 1; (m * m + n * n) * kPi * kPi <= kappa2 + 1.0; ++n) {
        if (std::abs(kappa2 - (m * m + n * n) * kPi * kPi) < 1e-8 * kappa2) {
          throw InvalidArgument("helmholtz-indefinite: kappa^2 is a Dirichlet eigenvalue");
        }
      }
    }
    ProblemSpec p = sine_problem(name, {0.0, 0.0}, -kappa2);
    p.regime_hint = Regime::General;
    return p;
  }

  if (name == "jump-diffusion") {
    const double a_left = param(params, "a_left", 1.0);
    const double a_right = param(params, "a_right", 10.0);
    auto a = [a_left, a_right](const Point& x) { return x.x < 0.5 ? a_left : a_right; };
    ProblemSpec p;
    p.name = name;
    p.A = [a](const Point& x) { return Mat2::scalar(a(x)); };
    p.b = [](const Point&) { return Vec2{}; };
    p.c = [](const Point&) { return 0.0; };
    p.f = [a](const Point& x) { return 2.0 * kPi * kPi * a(x) * sine_u(x); };
    p.A_discontinuous = true;
    ExactSolution ex;
    ex.u = sine_u;
    ex.grad_u = sine_grad;
    // a du/dx vanishes on x = 1/2, so n.sigma is continuous while the
    // tangential component jumps by the coefficient ratio
    ex.sigma = [a](const Point& x) { return -a(x) * sine_grad(x); };
    ex.div_sigma = [a](const Point& x) { return 2.0 * kPi * kPi * a(x) * sine_u(x); };
    ex.grad_sigma = [a](const Point& x) { return (-a(x)) * sine_hessian(x); };
    p.exact = ex;
    return p;
  }

  if (name == "lshape-singular") {
    // u = chi * s with the harmonic singular function s and the cutoff
    // chi = (1 - x^2)(1 - y^2) vanishing on the outer boundary
    auto grad_s = [](const Point& x) {
      const double r = std::hypot(x.x, x.y);
      double theta = std::atan2(x.y, x.x);
      if (theta < 0.0) theta += 2.0 * kPi;
      const double c = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0);
      return Vec2{-c * std::sin(theta / 3.0), c * std::cos(theta / 3.0)};
    };
    auto chi = [](const Point& x) { return (1.0 - x.x * x.x) * (1.0 - x.y * x.y); };
    auto grad_chi = [](const Point& x) {
      return Vec2{-2.0 * x.x * (1.0 - x.y * x.y), -2.0 * x.y * (1.0 - x.x * x.x)};
    };
    auto lap_chi = [](const Point& x) { return -2.0 * (1.0 - x.y * x.y) - 2.0 * (1.0 - x.x * x.x); };
    auto u = [chi](const Point& x) { return chi(x) * lshape_singular_factor(x); };
    auto grad_u = [=](const Point& x) { return lshape_singular_factor(x) * grad_chi(x) + chi(x) * grad_s(x); };
    auto f = [=](const Point& x) { return -(lshape_singular_factor(x) * lap_chi(x) + 2.0 * dot(grad_chi(x), grad_s(x))); };
    ProblemSpec p;
    p.name = name;
    p.A = [](const Point&) { return Mat2::identity(); };
    p.b = [](const Point&) { return Vec2{}; };
    p.c = [](const Point&) { return 0.0; };
    p.f = f;
    p.domain = Domain::LShape;
    ExactSolution ex;
    ex.u = u;
    ex.grad_u = grad_u;
    ex.sigma = [grad_u](const Point& x) { return -grad_u(x); };
    ex.div_sigma = f;
    p.exact = ex;
    return p;
  }

  if (name == "linear-x") {
    // u = x: zero on the left side, conormal derivative zero on top/bottom.
    // Only its interpolants are used (no homogeneous problem has it as solution
    // on the full square); the right side is tagged Neumann so u has no jumps.
    ProblemSpec p;
    p.name = name;
    p.A = [](const Point&) { return Mat2::identity(); };
    p.b = [](const Point&) { return Vec2{}; };
    p.c = [](const Point&) { return 0.0; };
    p.f = [](const Point&) { return 0.0; };
    p.dirichlet_sides = SideSet{Side::Left};
    ExactSolution ex;
    ex.u = [](const Point& x) { return x.x; };
    ex.grad_u = [](const Point&) { return Vec2{1.0, 0.0}; };
    ex.sigma = [](const Point&) { return Vec2{-1.0, 0.0}; };
    ex.div_sigma = [](const Point&) { return 0.0; };
    ex.grad_sigma = [](const Point&) { return Mat2{}; };
    p.exact = ex;
    return p;
  }

  throw InvalidArgument("unknown builtin problem '" + name + "'");
}

double exact_residual(const ProblemSpec& p, std::span<const Point> points) {
  if (!p.exact) throw InvalidArgument("exact_residual: problem has no exact solution");
  const ExactSolution& ex = *p.exact;
  double worst = 0.0;
  for (const Point& x : points) {
    const Vec2 g = ex.grad_u(x);
    const double r1 = ex.div_sigma(x) + dot(p.b(x), g) + p.c(x) * ex.u(x) - p.f(x);
    const Vec2 r2 = p.A(x) * g + ex.sigma(x);
    worst = std::max({worst, std::abs(r1), norm(r2)});
  }
  return worst;
}

}  // namespace lsfem
