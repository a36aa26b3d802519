#include "lsfem/adapt.hpp"

#include <algorithm>
#include <numeric>

#include "lsfem/errors.hpp"
#include "lsfem/estimators.hpp"

namespace lsfem {

namespace {
std::size_t idx(int i) { return static_cast<std::size_t>(i); }
}  // namespace

std::vector<int> dorfler_mark(std::span<const double> local, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("dorfler_mark: theta must lie in [0, 1]");
  for (double v : local) {
    if (!(v >= 0.0)) throw InvalidArgument("dorfler_mark: indicators must be nonnegative");
  }
  std::vector<int> order(local.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return local[idx(a)] > local[idx(b)]; });
  double total = 0.0;
  for (int i : order) total += local[idx(i)];
  const double target = theta * total;
  std::vector<int> marked;
  double acc = 0.0;
  for (int i : order) {
    if (!marked.empty() && acc >= target) break;
    marked.push_back(i);
    acc += local[idx(i)];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

std::string default_estimator(Method m) {
  switch (m) {
    case Method::Div2: return "eta4";
    case Method::DivCurl3: return "zeta";
    case Method::DivCurl2: return "xi";
    case Method::GalerkinCR: break;
  }
  throw InvalidArgument("adapt: no estimator for method " + to_string(m));
}

AdaptTrace adapt_loop(const ProblemSpec& p, Method m, const MeshPtr& initial, const AdaptOptions& opt) {
  if (!(opt.theta >= 0.0 && opt.theta <= 1.0)) throw InvalidArgument("adapt_loop: theta must lie in [0, 1]");
  AdaptTrace trace;
  trace.estimator = opt.estimator.empty() ? default_estimator(m) : opt.estimator;
  int eta_index = 0;
  if (m == Method::Div2) {
    if (trace.estimator.size() != 4 || trace.estimator.rfind("eta", 0) != 0 || trace.estimator[3] < '1' ||
        trace.estimator[3] > '6') {
      throw InvalidArgument("adapt_loop: div2 estimator must be one of eta1..eta6");
    }
    eta_index = trace.estimator[3] - '0';
  } else if (trace.estimator != default_estimator(m)) {
    throw InvalidArgument("adapt_loop: method " + to_string(m) + " uses estimator " + default_estimator(m));
  }

  MeshPtr mesh = initial;
  int last_dofs = -1;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const LsSystem sys = assemble(m, mesh, p);
    if (sys.size() <= last_dofs) throw std::logic_error("adapt_loop: refinement did not add unknowns");
    last_dofs = sys.size();
    const SolveReport sol = cg_solve(sys, opt.cg);

    AdaptRecord rec;
    rec.iteration = it;
    rec.dofs = sys.size();
    rec.triangles = mesh->num_triangles();
    const MeshStats st = mesh_stats(*mesh);
    rec.h_min = st.h_min;
    rec.h_max = st.h_max;
    rec.converged = sol.converged;
    rec.breakdown = sol.breakdown;
    trace.final_mesh = mesh;
    if (sol.breakdown || !sol.converged) {
      trace.records.push_back(rec);
      trace.aborted = true;
      break;
    }
    const DiscreteFields f = split_solution(sys, sol.solution);
    std::optional<double> err;
    if (p.exact) {
      const ErrorReport e = error_vs_exact(m, f, p);
      err = m == Method::DivCurl3 ? e.y_norm : e.triple;
    }
    const EstimatorReport est =
        m == Method::Div2 ? estimate_div2(f, p, {eta_index}, err) : estimate_divcurl(m, f, p, err);
    const std::vector<double>& local = est.local.at(trace.estimator);
    rec.estimator = est.global.at(trace.estimator);
    rec.true_error = err;

    const bool done = sys.size() >= opt.max_dofs || it + 1 == opt.max_iterations;
    std::vector<int> marked;
    if (!done) {
      marked = dorfler_mark(local, opt.theta);
      rec.marked_fraction = static_cast<double>(marked.size()) / mesh->num_triangles();
    }
    trace.records.push_back(rec);
    if (done) break;
    mesh = std::make_shared<const Triangulation>(bisect_marked(*mesh, marked));
  }
  return trace;
}

}  // namespace lsfem
