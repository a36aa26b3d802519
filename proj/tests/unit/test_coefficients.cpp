#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <variant>

#include "lsfem/coefficients.hpp"
#include "lsfem/errors.hpp"

using namespace lsfem;

namespace {

constexpr double kPi = std::numbers::pi;

// Reference expression trees generated and evaluated independently of the parser.
struct RefNode {
  enum Kind { Num, X, Y, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt, Abs } kind;
  double value = 0.0;
  std::unique_ptr<RefNode> a, b;

  double eval(double x, double y) const {
    switch (kind) {
      case Num: return value;
      case X: return x;
      case Y: return y;
      case Neg: return -a->eval(x, y);
      case Add: return a->eval(x, y) + b->eval(x, y);
      case Sub: return a->eval(x, y) - b->eval(x, y);
      case Mul: return a->eval(x, y) * b->eval(x, y);
      case Div: return a->eval(x, y) / b->eval(x, y);
      case Pow: return std::pow(a->eval(x, y), b->eval(x, y));
      case Sin: return std::sin(a->eval(x, y));
      case Cos: return std::cos(a->eval(x, y));
      case Exp: return std::exp(a->eval(x, y));
      case Sqrt: return std::sqrt(a->eval(x, y));
      case Abs: return std::abs(a->eval(x, y));
    }
    return 0.0;
  }

  int prec() const {
    switch (kind) {
      case Add:
      case Sub: return 1;
      case Mul:
      case Div: return 2;
      case Neg: return 3;
      case Pow: return 4;
      default: return 5;
    }
  }

  // Minimal parentheses under the documented precedence and associativity.
  std::string print() const {
    auto wrap = [](const RefNode& n, int need) { return n.prec() < need ? "(" + n.print() + ")" : n.print(); };
    char buf[40];
    switch (kind) {
      case Num: std::snprintf(buf, sizeof buf, "%.17g", value); return buf;
      case X: return "x";
      case Y: return "y";
      case Neg: return "-" + wrap(*a, 3);
      case Add: return wrap(*a, 1) + " + " + wrap(*b, 2);
      case Sub: return wrap(*a, 1) + "-" + wrap(*b, 2);
      case Mul: return wrap(*a, 2) + "*" + wrap(*b, 3);
      case Div: return wrap(*a, 2) + " / " + wrap(*b, 3);
      case Pow: return wrap(*a, 5) + "^" + wrap(*b, 3);
      case Sin: return "sin(" + a->print() + ")";
      case Cos: return "cos(" + a->print() + ")";
      case Exp: return "exp(" + a->print() + ")";
      case Sqrt: return "sqrt(" + a->print() + ")";
      case Abs: return "abs( " + a->print() + " )";
    }
    return "";
  }
};

std::unique_ptr<RefNode> random_tree(std::mt19937_64& rng, int depth) {
  auto node = std::make_unique<RefNode>();
  std::uniform_int_distribution<int> leaf(0, 2);
  if (depth == 0) {
    const int k = leaf(rng);
    node->kind = k == 0 ? RefNode::Num : k == 1 ? RefNode::X : RefNode::Y;
    node->value = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    return node;
  }
  std::uniform_int_distribution<int> pick(0, 12);
  const int k = pick(rng);
  static const RefNode::Kind kinds[] = {RefNode::Neg, RefNode::Add, RefNode::Sub, RefNode::Mul, RefNode::Div,
                                        RefNode::Pow, RefNode::Sin, RefNode::Cos, RefNode::Exp, RefNode::Sqrt,
                                        RefNode::Abs, RefNode::Add, RefNode::Mul};
  node->kind = kinds[k];
  node->a = random_tree(rng, depth - 1);
  if (node->kind == RefNode::Pow) {
    // small integer exponents keep values finite
    node->b = std::make_unique<RefNode>();
    node->b->kind = RefNode::Num;
    node->b->value = std::uniform_int_distribution<int>(0, 3)(rng);
  } else if (node->kind >= RefNode::Add && node->kind <= RefNode::Div) {
    node->b = random_tree(rng, depth - 1);
  }
  return node;
}

Mat2 A_of(const ProblemSpec& p, Point x) { return std::get<Mat2>(eval_coeff(p, Coeff::A, x)); }

}  // namespace

TEST(ParseExpr, Examples) {
  EXPECT_DOUBLE_EQ(parse_expr("2+3*4").eval(0, 0), 14.0);
  EXPECT_NEAR(parse_expr("sin(pi*x)*sin(pi*y)").eval(0.5, 0.5), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(parse_expr("x^2+y").eval(2, 3), 7.0);
}

TEST(ParseExpr, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(parse_expr("2^3^2").eval(0, 0), 512.0);
  EXPECT_DOUBLE_EQ(parse_expr("-2^2").eval(0, 0), -4.0);
  EXPECT_DOUBLE_EQ(parse_expr("8/4/2").eval(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(parse_expr("8-4-2").eval(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(parse_expr("--x").eval(3, 0), 3.0);
  EXPECT_DOUBLE_EQ(parse_expr("2^-1").eval(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(parse_expr(" 1.5e1 * ( x + y ) ").eval(1, 1), 30.0);
  EXPECT_DOUBLE_EQ(parse_expr("abs(-x) + sqrt(y) + exp(0) + cos(0)").eval(-2, 4), 6.0);
}

TEST(ParseExpr, ErrorsCarryOffsets) {
  try {
    parse_expr("1 + foo(x)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  try {
    parse_expr("(x + 1");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 6u);
  }
  EXPECT_THROW(parse_expr(""), ParseError);
  EXPECT_THROW(parse_expr("x y"), ParseError);
  EXPECT_THROW(parse_expr("2 +* 3"), ParseError);
  EXPECT_THROW(parse_expr("sin x"), ParseError);
  EXPECT_THROW(Expr().eval(0, 0), InvalidArgument);
}

TEST(ParseExpr, MatchesReferenceOracle) {
  std::mt19937_64 rng(99);
  int compared = 0;
  for (int i = 0; i < 100; ++i) {
    const auto tree = random_tree(rng, 1 + i % 5);
    const std::string text = tree->print();
    const Expr e = parse_expr(text);
    for (auto [x, y] : {std::pair{0.3, 0.7}, std::pair{1.2, -0.4}, std::pair{-0.8, 0.25}}) {
      const double want = tree->eval(x, y);
      const double got = e.eval(x, y);
      if (std::isnan(want)) {
        EXPECT_TRUE(std::isnan(got)) << text;
        continue;
      }
      if (std::isinf(want)) {
        EXPECT_EQ(got, want) << text;
        continue;
      }
      EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want))) << text;
      ++compared;
    }
    // printing round-trips to an identical tree
    EXPECT_EQ(parse_expr(e.to_string()).to_string(), e.to_string());
  }
  EXPECT_GT(compared, 200);
}

TEST(EvalCoeff, Presets) {
  const ProblemSpec poisson = builtin_problem("poisson-sine");
  const Mat2 A = A_of(poisson, {0.3, 0.4});
  EXPECT_EQ(A.a11, 1.0);
  EXPECT_EQ(A.a22, 1.0);
  EXPECT_EQ(A.a12, 0.0);
  const Vec2 b = std::get<Vec2>(eval_coeff(poisson, Coeff::b, {0.3, 0.4}));
  EXPECT_EQ(b.x, 0.0);
  EXPECT_EQ(b.y, 0.0);
  EXPECT_EQ(std::get<double>(eval_coeff(poisson, Coeff::c, {0.3, 0.4})), 0.0);

  const ProblemSpec helm = builtin_problem("helmholtz-indefinite", {{"kappa2", 30.0}});
  for (Point x : {Point{0.1, 0.2}, Point{0.9, 0.5}}) EXPECT_EQ(std::get<double>(eval_coeff(helm, Coeff::c, x)), -30.0);

  const ProblemSpec jump = builtin_problem("jump-diffusion");
  EXPECT_EQ(A_of(jump, {0.25, 0.5}).a11, 1.0);
  EXPECT_EQ(A_of(jump, {0.75, 0.5}).a11, 10.0);
  EXPECT_TRUE(jump.A_discontinuous);
}

TEST(BuiltinProblem, Examples) {
  const ProblemSpec p = builtin_problem("poisson-sine");
  EXPECT_NEAR(p.f({0.5, 0.5}), 2.0 * kPi * kPi, 1e-12);
  // kappa^2 = 30 lies between the first two Dirichlet eigenvalues
  EXPECT_GT(30.0, 2 * kPi * kPi);
  EXPECT_LT(30.0, 5 * kPi * kPi);
  EXPECT_NO_THROW(builtin_problem("helmholtz-indefinite", {{"kappa2", 30.0}}));
  EXPECT_THROW(builtin_problem("helmholtz-indefinite", {{"kappa2", 5 * kPi * kPi}}), InvalidArgument);
  EXPECT_THROW(builtin_problem("helmholtz-indefinite", {{"kappa2", 8 * kPi * kPi}}), InvalidArgument);
  // r = 1, theta = 3 pi / 4
  const Point x{std::cos(0.75 * kPi), std::sin(0.75 * kPi)};
  EXPECT_NEAR(lshape_singular_factor(x), 1.0, 1e-14);
  EXPECT_THROW(builtin_problem("no-such-problem"), InvalidArgument);
  EXPECT_EQ(builtin_problem_names().size(), 6u);
}

TEST(BuiltinProblem, LShapeSolutionVanishesOnBoundary) {
  const ProblemSpec p = builtin_problem("lshape-singular");
  EXPECT_EQ(p.domain, Domain::LShape);
  for (double s = -1.0; s <= 1.0; s += 0.125) {
    EXPECT_NEAR(p.exact->u({-1.0, s}), 0.0, 1e-15);
    EXPECT_NEAR(p.exact->u({s, 1.0}), 0.0, 1e-15);
    if (s >= 0) {
      EXPECT_NEAR(p.exact->u({s, 0.0}), 0.0, 1e-15);   // theta = 0
      EXPECT_NEAR(p.exact->u({0.0, -s}), 0.0, 1e-14);  // theta = 3 pi / 2
    }
  }
  EXPECT_NEAR(lshape_singular_factor({0.0, 1.0}), std::sin(kPi / 3.0), 1e-14);
}

TEST(BuiltinProblem, ManufacturedResidualIdentities) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 0.99), w(-0.99, 0.99);
  for (const std::string& name : builtin_problem_names()) {
    const ProblemSpec p = builtin_problem(name, name == "convection" ? ProblemParams{{"beta1", 3.0}, {"beta2", -2.0}} : ProblemParams{});
    ASSERT_TRUE(p.exact.has_value()) << name;
    std::vector<Point> pts;
    while (pts.size() < 200) {
      Point x = p.domain == Domain::LShape ? Point{w(rng), w(rng)} : Point{u(rng), u(rng)};
      if (p.domain == Domain::LShape && x.x > 0 && x.y < 0) continue;
      if (name == "jump-diffusion" && std::abs(x.x - 0.5) < 1e-3) continue;
      pts.push_back(x);
    }
    EXPECT_LE(exact_residual(p, pts), 1e-10) << name;
  }
}

TEST(BuiltinProblem, LShapeForcingMatchesLaplacian) {
  // -Laplace(u) by central differences of the exact gradient
  const ProblemSpec p = builtin_problem("lshape-singular");
  const double h = 1e-5;
  for (Point x : {Point{-0.5, 0.5}, Point{0.3, 0.6}, Point{-0.2, -0.7}, Point{-0.01, 0.02}}) {
    auto g = p.exact->grad_u;
    const double lap = (g({x.x + h, x.y}).x - g({x.x - h, x.y}).x + g({x.x, x.y + h}).y - g({x.x, x.y - h}).y) / (2 * h);
    EXPECT_NEAR(p.f(x), -lap, 1e-5 * std::max(1.0, std::abs(lap)));
  }
}

TEST(ProblemSpec, Validation) {
  ProblemSpec p = builtin_problem("poisson-sine");
  p.weights = {0.5, 0.25, 0.25};
  EXPECT_NO_THROW(p.validate());
  p.weights = {0.5, 0.5, 0.5};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.weights = {1.5, -0.5, 0.0};
  EXPECT_THROW(p.validate(), InvalidArgument);
  ProblemSpec q = builtin_problem("poisson-sine");
  q.dirichlet_sides = SideSet{};
  EXPECT_THROW(q.validate(), InvalidArgument);
  ProblemSpec r = builtin_problem("poisson-sine");
  r.f = nullptr;
  EXPECT_THROW(r.validate(), InvalidArgument);
}

TEST(EvalPoint, RejectsNonSpdDiffusion) {
  ProblemSpec p = builtin_problem("poisson-sine");
  p.A = [](const Point&) { return Mat2{1.0, 2.0, 2.0, 1.0}; };
  try {
    eval_point(p, {0.25, 0.5});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos);
  }
  p.A = [](const Point&) { return Mat2{1.0, 0.5, 0.0, 1.0}; };
  EXPECT_THROW(eval_point(p, {0.5, 0.5}), DataError);
}

TEST(EvalPoint, InverseAndDerivatives) {
  ProblemSpec p = builtin_problem("poisson-sine");
  p.A = [](const Point& x) { return Mat2::scalar(1.0 + x.x * x.x); };
  const PointData d = eval_point(p, {0.5, 0.25}, true);
  EXPECT_NEAR(d.Ainv.a11, 1.0 / 1.25, 1e-15);
  // d/dx (1 + x^2)^-1 = -2x / (1 + x^2)^2
  EXPECT_NEAR(d.dAinv_dx.a11, -1.0 / (1.25 * 1.25), 1e-8);
  EXPECT_NEAR(d.dAinv_dy.a11, 0.0, 1e-10);
}
