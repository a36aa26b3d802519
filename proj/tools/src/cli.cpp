#include "lsfem_cli/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lsfem/errors.hpp"
#include "lsfem/experiments.hpp"

namespace lsfem::cli {

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> method;
  std::optional<std::string> problem;
  std::optional<int> levels;
  std::optional<int> n;
  std::optional<double> theta;
  std::optional<std::string> estimator;
  std::optional<std::string> out;
  std::optional<double> tol;
  std::optional<unsigned> seed;
  std::optional<int> edge;
  std::optional<int> max_dofs;
  std::optional<std::string> betas;
  bool vtk = false;
};

template <class T>
std::string str(const T& v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

/// Config file first, then command-line flags on top.
RunConfig build_config(const Flags& f) {
  ConfigFile cfg = f.config.empty() ? ConfigFile{} : load_config(f.config);
  if (f.problem) {
    // switching presets drops parameters meant for the configured one
    if (cfg.get("problem", "name", "") != *f.problem) {
      const ConfigFile::Section old = cfg.section("problem");
      ConfigFile fresh;
      for (const auto& [sec, kv] : cfg.sections()) {
        if (sec == "problem") continue;
        for (const auto& [k, v] : kv) fresh.set(sec, k, v);
      }
      for (const char* keep : {"weights", "regime"}) {
        auto it = old.find(keep);
        if (it != old.end()) fresh.set("problem", keep, it->second);
      }
      cfg = fresh;
    }
    cfg.set("problem", "name", *f.problem);
  }
  if (f.method) cfg.set("method", "name", *f.method);
  if (f.tol) cfg.set("method", "tol", str(*f.tol));
  if (f.seed) cfg.set("method", "seed", str(*f.seed));
  if (f.betas) cfg.set("method", "betas", *f.betas);
  if (f.levels) cfg.set("mesh", "levels", str(*f.levels));
  if (f.n) cfg.set("mesh", "n", str(*f.n));
  if (f.edge) cfg.set("mesh", "edge", str(*f.edge));
  if (f.theta) cfg.set("adapt", "theta", str(*f.theta));
  if (f.estimator) cfg.set("adapt", "estimator", *f.estimator);
  if (f.max_dofs) cfg.set("adapt", "max_dofs", str(*f.max_dofs));
  if (f.out) cfg.set("output", "dir", *f.out);
  if (f.vtk) cfg.set("output", "vtk", "true");
  return make_run_config(cfg);
}

std::string out_path(const RunConfig& rc, const std::string& file) {
  std::filesystem::create_directories(rc.out_dir);
  return (std::filesystem::path(rc.out_dir) / file).string();
}

void write_fields_vtk(const RunConfig& rc, const SolveResult& r, const std::string& file) {
  write_vtk_file(out_path(rc, file), *r.fields.u.space->mesh_ptr(), cell_data(r.fields));
}

int cmd_solve(const RunConfig& rc, std::ostream& out) {
  const SolveResult r = solve_once(rc.problem, rc.method, initial_mesh(rc.problem, rc.n.value_or(8)), rc);
  const std::string path = out_path(rc, "solve.csv");
  solve_table(r, rc).write_file(path);
  if (rc.vtk) write_fields_vtk(rc, r, "solution.vtk");
  out << "solve: " << to_string(rc.method) << " on " << rc.problem.name << ", " << r.system.size() << " dofs, "
      << r.report.iterations << " CG iterations -> " << path << "\n";
  if (r.report.breakdown || !r.report.converged) {
    out << "solve: " << (r.report.breakdown ? "CG breakdown" : "CG did not converge") << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_convergence(const RunConfig& rc, std::ostream& out) {
  const auto rows = run_convergence(rc);
  const std::string path = out_path(rc, "convergence.csv");
  convergence_table(rows, rc).write_file(path);
  bool failed = false;
  for (const ConvergenceRow& r : rows) {
    out << "level " << r.level << ": n=" << r.n << " dofs=" << r.dofs << " error=" << format_number(r.error);
    if (r.rate) out << " rate=" << format_number(*r.rate);
    if (r.breakdown || !r.converged) {
      out << (r.breakdown ? " [breakdown]" : " [not converged]");
      failed = true;
    }
    out << "\n";
  }
  out << "convergence: " << rows.size() << " levels -> " << path << "\n";
  return failed ? kExitNumerical : kExitOk;
}

int cmd_adapt(const RunConfig& rc, std::ostream& out) {
  const AdaptTrace trace = run_adapt(rc);
  const std::string path = out_path(rc, "adapt.csv");
  adapt_table(trace).write_file(path);
  if (rc.vtk && trace.final_mesh && !trace.aborted) {
    write_fields_vtk(rc, solve_once(rc.problem, rc.method, trace.final_mesh, rc), "adapt_final.vtk");
  }
  const AdaptRecord& last = trace.records.back();
  out << "adapt: " << trace.records.size() << " iterations, estimator " << trace.estimator << ", final dofs "
      << last.dofs << " -> " << path << "\n";
  if (trace.aborted) {
    out << "adapt: aborted on solver failure at iteration " << last.iteration << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_counterexample(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const CounterexampleResult r = run_counterexample(rc, err);
  const std::string path = out_path(rc, "counterexample.csv");
  counterexample_table(r).write_file(path);
  for (const CounterexampleRow& row : r.rows) {
    out << "level " << row.level << ": h=" << format_number(row.h_max) << " ratio=" << format_number(row.ratio)
        << "\n";
  }
  out << r.verdict << "\n";
  return kExitOk;
}

int cmd_probe(const RunConfig& rc, std::ostream& out) {
  const auto rows = run_coercivity_probe(rc);
  const std::string path = out_path(rc, "probe.csv");
  probe_table(rows).write_file(path);
  std::vector<double> seen;
  for (const ProbeRow& r : rows) {
    bool dup = false;
    for (double b : seen) dup = dup || b == r.beta || (std::isnan(b) && std::isnan(r.beta));
    if (dup) continue;
    seen.push_back(r.beta);
    out << "beta=" << (std::isnan(r.beta) ? std::string("-") : format_number(r.beta))
        << ": first positive level " << first_positive_level(rows, r.beta) << "\n";
  }
  out << "probe: " << rows.size() << " rows -> " << path << "\n";
  return kExitOk;
}

int cmd_export(const RunConfig& rc, std::ostream& out) {
  const MeshPtr mesh = initial_mesh(rc.problem, rc.n.value_or(8));
  const LsSystem sys = assemble(rc.method, mesh, rc.problem, rc.assembly);
  const std::string mpath = out_path(rc, "matrix.mtx");
  const std::string rpath = out_path(rc, "rhs.mtx");
  {
    std::ofstream f(mpath, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + mpath);
    write_matrix_market(f, sys.matrix);
  }
  {
    std::ofstream f(rpath, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + rpath);
    write_matrix_market(f, sys.rhs);
  }
  if (rc.vtk) write_vtk_file(out_path(rc, "mesh.vtk"), *mesh, {});
  out << "export: " << sys.size() << " unknowns, " << sys.matrix.nnz() << " nonzeros -> " << mpath << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonconforming least-squares finite elements in 2D", "lsfem"};
  app.require_subcommand(1);
  Flags f;

  app.add_option("--config", f.config, "Run configuration file");
  app.add_option("--method", f.method, "div2, divcurl3, divcurl2 or galerkin-cr");
  app.add_option("--problem", f.problem, "Built-in problem name");
  app.add_option("--levels", f.levels, "Number of refinement levels")->check(CLI::PositiveNumber);
  app.add_option("--n", f.n, "Initial cells per side")->check(CLI::PositiveNumber);
  app.add_option("--theta", f.theta, "Dorfler parameter")->check(CLI::Range(0.0, 1.0));
  app.add_option("--estimator", f.estimator, "Marking estimator (eta1..eta6, zeta, xi)");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--tol", f.tol, "Relative CG tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "Seed for randomized sweeps");
  app.add_option("--edge", f.edge, "Counterexample edge index");
  app.add_option("--max-dofs", f.max_dofs, "Adaptive loop stops at this many unknowns");
  app.add_option("--betas", f.betas, "Probe convection strengths, comma separated");
  app.add_flag("--vtk", f.vtk, "Also write VTK output");

  auto* solve = app.add_subcommand("solve", "Solve one configured problem");
  auto* conv = app.add_subcommand("convergence", "Uniform refinement sweep");
  auto* adapt = app.add_subcommand("adapt", "Adaptive refinement loop");
  auto* counter = app.add_subcommand("counterexample", "Norm-equivalence counterexample for the two-field functional");
  auto* probe = app.add_subcommand("probe", "Smallest eigenvalue versus mesh level");
  auto* exp = app.add_subcommand("export", "Write the assembled system in Matrix Market format");
  for (auto* s : {solve, conv, adapt, counter, probe, exp}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }

  if ((solve->parsed() || exp->parsed()) && f.config.empty()) {
    err << "lsfem: " << (solve->parsed() ? "solve" : "export") << " requires --config\n";
    return kExitUsage;
  }
  if (probe->parsed() && f.config.empty() && !f.problem && !f.betas) f.betas = "0,10,40,160";

  try {
    const RunConfig rc = build_config(f);
    if (solve->parsed()) return cmd_solve(rc, out);
    if (conv->parsed()) return cmd_convergence(rc, out);
    if (adapt->parsed()) return cmd_adapt(rc, out);
    if (counter->parsed()) return cmd_counterexample(rc, out, err);
    if (probe->parsed()) return cmd_probe(rc, out);
    return cmd_export(rc, out);
  } catch (const ParseError& e) {
    err << "lsfem: config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "lsfem: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "lsfem: invalid data: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RestrictionError& e) {
    err << "lsfem: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SingularMatrixError& e) {
    err << "lsfem: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "lsfem: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace lsfem::cli
