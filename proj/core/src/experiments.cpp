#include "lsfem/experiments.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

DivCurlVariant parse_variant(const std::string& s) {
  if (s == "J1" || s == "j1" || s == "1") return DivCurlVariant::J1;
  if (s == "J2" || s == "j2" || s == "2") return DivCurlVariant::J2;
  if (s == "J3" || s == "j3" || s == "3") return DivCurlVariant::J3;
  throw InvalidArgument("method.variant: expected J1, J2 or J3");
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::string s = text;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument(what + ": '" + tok + "' is not a number");
    }
  }
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::optional<double> rate_between(double prev, double cur) {
  if (!(prev > 0.0) || !(cur > 0.0) || !std::isfinite(prev) || !std::isfinite(cur)) return std::nullopt;
  return std::log2(prev / cur);
}

double primary_error(Method m, const ErrorReport& e) {
  switch (m) {
    case Method::Div2: return e.triple;
    case Method::DivCurl3: return e.y_norm;
    case Method::DivCurl2: return e.flux_h1_potential;
    case Method::GalerkinCR: return e.grad_u;
  }
  return e.triple;
}

std::vector<std::string> estimator_names(Method m) {
  switch (m) {
    case Method::Div2: return {"eta1", "eta2", "eta3", "eta4", "eta5", "eta6"};
    case Method::DivCurl3: return {"zeta"};
    case Method::DivCurl2: return {"xi"};
    case Method::GalerkinCR: return {};
  }
  return {};
}

}  // namespace

RunConfig make_run_config(const ConfigFile& cfg) {
  RunConfig rc;
  rc.problem = problem_from_config(cfg);
  rc.problem_name = cfg.get("problem", "name", "poisson-sine");
  for (const auto& [k, v] : cfg.section("problem")) {
    if (k == "name" || k == "regime" || k == "weights") continue;
    if (rc.problem_name != "custom") rc.problem_params[k] = cfg.get_double("problem", k, 0.0);
  }
  rc.method = parse_method(cfg.get("method", "name", "div2"));
  rc.assembly.variant = parse_variant(cfg.get("method", "variant", "J1"));
  rc.tol = cfg.get_double("method", "tol", rc.tol);
  rc.seed = static_cast<unsigned>(cfg.get_int("method", "seed", static_cast<int>(rc.seed)));
  if (cfg.has("method", "betas")) rc.betas = parse_list(*cfg.find("method", "betas"), "method.betas");
  rc.probe_iters = cfg.get_int("method", "probe_iters", rc.probe_iters);
  if (cfg.has("mesh", "n")) rc.n = cfg.get_int("mesh", "n", 0);
  if (cfg.has("mesh", "levels")) rc.levels = cfg.get_int("mesh", "levels", 0);
  rc.edge = cfg.get_int("mesh", "edge", rc.edge);
  rc.theta = cfg.get_double("adapt", "theta", rc.theta);
  rc.max_dofs = cfg.get_int("adapt", "max_dofs", rc.max_dofs);
  rc.estimator = cfg.get("adapt", "estimator", rc.estimator);
  rc.max_iterations = cfg.get_int("adapt", "max_iterations", rc.max_iterations);
  rc.out_dir = cfg.get("output", "dir", rc.out_dir);
  rc.vtk = cfg.get_bool("output", "vtk", rc.vtk);

  if (rc.n && *rc.n < 1) throw InvalidArgument("mesh.n must be positive");
  if (rc.levels && *rc.levels < 1) throw InvalidArgument("mesh.levels must be positive");
  if (!(rc.tol > 0.0)) throw InvalidArgument("method.tol must be positive");
  if (!(rc.theta >= 0.0 && rc.theta <= 1.0)) throw InvalidArgument("adapt.theta must lie in [0, 1]");
  return rc;
}

MeshPtr initial_mesh(const ProblemSpec& p, int n) {
  if (n < 1) throw InvalidArgument("initial_mesh: n must be positive");
  if (p.domain == Domain::LShape) return std::make_shared<const Triangulation>(make_lshape(n));
  return std::make_shared<const Triangulation>(make_structured_square(n, p.dirichlet_sides));
}

// ---------------------------------------------------------------------------
// single solve

SolveResult solve_once(const ProblemSpec& p, Method m, const MeshPtr& mesh, const RunConfig& cfg) {
  SolveResult r;
  r.stats = mesh_stats(*mesh);
  r.system = assemble(m, mesh, p, cfg.assembly);
  CgOptions cg;
  cg.tol = cfg.tol;
  if (m == Method::GalerkinCR && r.system.matrix.symmetry_error() > 1e-12) {
    // the convective Galerkin matrix is not symmetric; it is small enough for LU
    if (r.system.size() > kDirectSolveLimit) {
      throw InvalidArgument("galerkin-cr with convection is limited to " + std::to_string(kDirectSolveLimit) +
                            " unknowns");
    }
    r.report = direct_solve_small(r.system);
  } else {
    r.report = cg_solve(r.system, cg);
  }
  r.fields = split_solution(r.system, r.report.solution);
  if (r.report.breakdown || !r.report.converged) return r;
  if (p.exact) r.errors = error_vs_exact(m, r.fields, p);
  std::optional<double> err;
  if (r.errors) err = primary_error(m, *r.errors);
  if (m == Method::Div2) {
    r.estimators = estimate_div2(r.fields, p, {}, err);
  } else if (m == Method::DivCurl3 || m == Method::DivCurl2) {
    r.estimators = estimate_divcurl(m, r.fields, p, err);
  }
  if (m != Method::GalerkinCR) r.functional = functional_value(m, r.fields, p, true, cfg.assembly);
  return r;
}

CsvTable solve_table(const SolveResult& r, const RunConfig& cfg) {
  std::vector<std::string> header = {"problem", "method", "regime", "triangles", "h_max", "dofs", "iterations",
                                     "relative_residual", "converged", "breakdown", "functional",
                                     "error_norm", "error", "l2_error"};
  const auto names = estimator_names(cfg.method);
  for (const auto& n : names) header.push_back(n);
  CsvTable t(header);
  std::vector<std::string> row = {cfg.problem.name,
                                  to_string(cfg.method),
                                  to_string(cfg.problem.regime_hint),
                                  std::to_string(r.stats.num_triangles),
                                  format_number(r.stats.h_max),
                                  std::to_string(r.system.size()),
                                  std::to_string(r.report.iterations),
                                  format_number(r.report.relative_residual),
                                  bool_str(r.report.converged),
                                  bool_str(r.report.breakdown),
                                  format_number(r.functional),
                                  error_norm_name(cfg.method),
                                  r.errors ? format_number(primary_error(cfg.method, *r.errors)) : "",
                                  r.errors ? format_number(r.errors->l2_u) : ""};
  for (const auto& n : names) {
    auto it = r.estimators.global.find(n);
    row.push_back(it == r.estimators.global.end() ? "" : format_number(it->second));
  }
  t.add_row(row);
  return t;
}

// ---------------------------------------------------------------------------
// convergence

std::string error_norm_name(Method m) {
  switch (m) {
    case Method::Div2: return "triple";
    case Method::DivCurl3: return "Y";
    case Method::DivCurl2: return "H1flux+potential";
    case Method::GalerkinCR: return "broken_H1";
  }
  return "?";
}

std::vector<ConvergenceRow> run_convergence(const RunConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  if (!p.exact) throw InvalidArgument("convergence: problem '" + p.name + "' has no exact solution");
  const int n0 = cfg.n.value_or(8);
  const int levels = cfg.levels.value_or(4);
  std::vector<ConvergenceRow> rows;
  for (int l = 0; l < levels; ++l) {
    const int n = n0 << l;
    const MeshPtr mesh = initial_mesh(p, n);
    const SolveResult r = solve_once(p, cfg.method, mesh, cfg);
    ConvergenceRow row;
    row.level = l;
    row.n = n;
    row.h_max = r.stats.h_max;
    row.dofs = r.system.size();
    row.iterations = r.report.iterations;
    row.converged = r.report.converged;
    row.breakdown = r.report.breakdown;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.error = r.errors ? primary_error(cfg.method, *r.errors) : nan;
    row.l2_error = r.errors ? r.errors->l2_u : nan;
    row.estimators = r.estimators.global;
    row.effectivity = r.estimators.effectivity;
    if (!rows.empty()) {
      row.rate = rate_between(rows.back().error, row.error);
      row.rate_l2 = rate_between(rows.back().l2_error, row.l2_error);
    }
    rows.push_back(row);
  }
  return rows;
}

CsvTable convergence_table(const std::vector<ConvergenceRow>& rows, const RunConfig& cfg) {
  std::vector<std::string> header = {"level", "n",     "h_max", "dofs",       "iterations", "converged", "breakdown",
                                     "regime", "error_norm", "error", "l2_error", "rate", "rate_l2"};
  const auto names = estimator_names(cfg.method);
  for (const auto& n : names) header.push_back(n);
  for (const auto& n : names) header.push_back("eff_" + n);
  CsvTable t(header);
  for (const ConvergenceRow& r : rows) {
    std::vector<std::string> cells = {std::to_string(r.level),
                                      std::to_string(r.n),
                                      format_number(r.h_max),
                                      std::to_string(r.dofs),
                                      std::to_string(r.iterations),
                                      bool_str(r.converged),
                                      bool_str(r.breakdown),
                                      to_string(cfg.problem.regime_hint),
                                      error_norm_name(cfg.method),
                                      format_number(r.error),
                                      format_number(r.l2_error),
                                      opt_number(r.rate),
                                      opt_number(r.rate_l2)};
    for (const auto& n : names) {
      auto it = r.estimators.find(n);
      cells.push_back(it == r.estimators.end() ? "" : format_number(it->second));
    }
    for (const auto& n : names) {
      auto it = r.effectivity.find(n);
      cells.push_back(it == r.effectivity.end() ? "" : format_number(it->second));
    }
    t.add_row(cells);
  }
  return t;
}

// ---------------------------------------------------------------------------
// adaptivity

AdaptTrace run_adapt(const RunConfig& cfg) {
  const int n0 = cfg.n.value_or(cfg.problem.domain == Domain::LShape ? 2 : 4);
  AdaptOptions opt;
  opt.theta = cfg.theta;
  opt.max_dofs = cfg.max_dofs;
  opt.estimator = cfg.estimator;
  opt.cg.tol = cfg.tol;
  opt.max_iterations = cfg.max_iterations;
  return adapt_loop(cfg.problem, cfg.method, initial_mesh(cfg.problem, n0), opt);
}

CsvTable adapt_table(const AdaptTrace& trace) {
  CsvTable t({"iteration", "dofs", "triangles", "estimator", "estimator_value", "true_error", "marked_fraction",
              "h_min", "h_max", "converged", "breakdown"});
  for (const AdaptRecord& r : trace.records) {
    t.add_row({std::to_string(r.iteration), std::to_string(r.dofs), std::to_string(r.triangles), trace.estimator,
               format_number(r.estimator), opt_number(r.true_error), format_number(r.marked_fraction),
               format_number(r.h_min), format_number(r.h_max), bool_str(r.converged), bool_str(r.breakdown)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// counterexample

CounterexampleResult run_counterexample(const RunConfig& cfg, std::ostream& diag) {
  const ProblemSpec& p = cfg.problem;
  const int n = cfg.n.value_or(4);
  const int levels = cfg.levels.value_or(4);
  const MeshPtr coarse = initial_mesh(p, n);

  bool reference_data = true;
  for (int t = 0; t < coarse->num_triangles(); ++t) {
    const Point x = coarse->centroid(t);
    const Mat2 A = p.A(x);
    const Vec2 b = p.b(x);
    if (A.a11 != 1.0 || A.a22 != 1.0 || A.a12 != 0.0 || A.a21 != 0.0 || b.x != 0.0 || b.y != 0.0 || p.c(x) != 0.0) {
      reference_data = false;
      break;
    }
  }
  if (!reference_data) {
    diag << "warning: counterexample uses A = I, b = 0, c = 0; the coefficients of problem '" << p.name
         << "' are ignored\n";
  }

  CounterexampleResult res;
  res.edge = cfg.edge;
  if (res.edge < 0) {
    const Point center = p.domain == Domain::LShape ? Point{-0.5, 0.5} : Point{0.5, 0.5};
    double best = std::numeric_limits<double>::infinity();
    for (int e = 0; e < coarse->num_edges(); ++e) {
      if (coarse->edge_tag(e) != BoundaryTag::Interior) continue;
      const double d = norm(coarse->edge_midpoint(e) - center);
      if (d < best - 1e-12) {
        best = d;
        res.edge = e;
      }
    }
  }
  res.rows = counterexample_ratio(coarse, res.edge, levels);
  res.decay = res.rows.back().ratio / res.rows.front().ratio;
  res.violated = res.decay < 0.05;
  std::ostringstream v;
  if (res.violated) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", 1.0 / res.decay);
    v << "uniform coercivity violated: ratio decayed by factor " << buf << " over " << levels << " levels";
  } else {
    v << "no violation detected: ratio(" << levels << ")/ratio(1) = " << format_number(res.decay);
  }
  res.verdict = v.str();
  return res;
}

CsvTable counterexample_table(const CounterexampleResult& r) {
  CsvTable t({"level", "h_max", "edge", "J_div", "triple_norm_sq", "ratio", "div_tau"});
  for (const CounterexampleRow& row : r.rows) {
    t.add_row({std::to_string(row.level), format_number(row.h_max), std::to_string(r.edge), format_number(row.j_div),
               format_number(row.triple_norm_sq), format_number(row.ratio), format_number(row.div_tau)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// coercivity probe

double generalized_lambda_min(const SparseMatrix& b, const SparseMatrix& g) {
  const int n = b.rows();
  if (n != b.cols() || g.rows() != n || g.cols() != n) throw InvalidArgument("generalized_lambda_min: size mismatch");
  if (n == 0) return 0.0;
  const auto bd = b.dense();
  const auto gd = g.dense();
  const Eigen::MatrixXd B = Eigen::Map<const Eigen::MatrixXd>(bd.data(), n, n);
  const Eigen::MatrixXd G = Eigen::Map<const Eigen::MatrixXd>(gd.data(), n, n);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(B, G, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("generalized_lambda_min: eigen solver failed");
  return es.eigenvalues().minCoeff();
}

namespace {

double dense_lambda_min(const SparseMatrix& b) {
  const int n = b.rows();
  if (n == 0) return 0.0;
  const auto bd = b.dense();
  const Eigen::MatrixXd B = Eigen::Map<const Eigen::MatrixXd>(bd.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

std::vector<ProbeRow> run_coercivity_probe(const RunConfig& cfg) {
  if (cfg.method == Method::GalerkinCR) throw InvalidArgument("probe: galerkin-cr has no least-squares system");
  const int n0 = cfg.n.value_or(1);
  const int levels = cfg.levels.value_or(5);
  std::vector<std::pair<double, ProblemSpec>> cases;
  if (cfg.betas.empty()) {
    cases.emplace_back(std::numeric_limits<double>::quiet_NaN(), cfg.problem);
  } else {
    for (double beta : cfg.betas) {
      ProblemSpec p = builtin_problem("convection", {{"beta1", beta}, {"beta2", 0.0}});
      p.weights = cfg.problem.weights;
      cases.emplace_back(beta, p);
    }
  }
  std::vector<ProbeRow> rows;
  for (const auto& [beta, p] : cases) {
    for (int l = 0; l < levels; ++l) {
      const int n = n0 << l;
      const MeshPtr mesh = initial_mesh(p, n);
      const LsSystem sys = assemble(cfg.method, mesh, p, cfg.assembly);
      ProbeRow row;
      row.beta = beta;
      row.level = l;
      row.n = n;
      row.h_max = mesh_stats(*mesh).h_max;
      row.dofs = sys.size();
      row.lambda_min = lambda_min_estimate(sys, cfg.probe_iters, 1e-12);
      CgOptions cg;
      cg.tol = cfg.tol;
      const SolveReport rep = cg_solve(sys, cg);
      row.breakdown = rep.breakdown;
      row.converged = rep.converged;
      if (sys.size() <= kDirectSolveLimit) row.lambda_min_dense = dense_lambda_min(sys.matrix);
      if (sys.size() <= kDirectSolveLimit) row.coercivity = generalized_lambda_min(sys.matrix, assemble_norm_matrix(sys));
      rows.push_back(row);
    }
  }
  return rows;
}

CsvTable probe_table(const std::vector<ProbeRow>& rows) {
  CsvTable t({"beta", "level", "n", "h_max", "dofs", "lambda_min", "lambda_min_dense", "breakdown",
              "converged", "coercivity"});
  for (const ProbeRow& r : rows) {
    t.add_row({std::isnan(r.beta) ? "" : format_number(r.beta), std::to_string(r.level), std::to_string(r.n),
               format_number(r.h_max), std::to_string(r.dofs), format_number(r.lambda_min), opt_number(r.lambda_min_dense),
               bool_str(r.breakdown),
               bool_str(r.converged), opt_number(r.coercivity)});
  }
  return t;
}

int first_positive_level(const std::vector<ProbeRow>& rows, double beta) {
  for (const ProbeRow& r : rows) {
    const bool same = (std::isnan(beta) && std::isnan(r.beta)) || r.beta == beta;
    if (same && r.lambda_min > 0.0 && !r.breakdown) return r.level;
  }
  return -1;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lsfem
