#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "lsfem/assembly.hpp"
#include "lsfem/linsolve.hpp"
#include "lsfem/mesh.hpp"

using namespace lsfem;

namespace {

MeshPtr square(int n) { return std::make_shared<const Triangulation>(make_structured_square(n)); }

void BM_AssembleDiv2(benchmark::State& state) {
  const MeshPtr m = square(static_cast<int>(state.range(0)));
  const ProblemSpec p = builtin_problem("poisson-sine");
  for (auto _ : state) benchmark::DoNotOptimize(assemble(Method::Div2, m, p));
  state.counters["triangles"] = m->num_triangles();
}
BENCHMARK(BM_AssembleDiv2)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AssembleDivCurl3(benchmark::State& state) {
  const MeshPtr m = square(static_cast<int>(state.range(0)));
  const ProblemSpec p = builtin_problem("convection");
  for (auto _ : state) benchmark::DoNotOptimize(assemble(Method::DivCurl3, m, p));
}
BENCHMARK(BM_AssembleDivCurl3)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_CgDiv2(benchmark::State& state) {
  const LsSystem sys = assemble(Method::Div2, square(static_cast<int>(state.range(0))), builtin_problem("poisson-sine"));
  int iters = 0;
  for (auto _ : state) {
    const SolveReport r = cg_solve(sys);
    iters = r.iterations;
    benchmark::DoNotOptimize(r.solution.data());
  }
  state.counters["dofs"] = sys.size();
  state.counters["iterations"] = iters;
}
BENCHMARK(BM_CgDiv2)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BisectCorner(benchmark::State& state) {
  const Triangulation base = make_lshape(4);
  for (auto _ : state) {
    Triangulation m = base;
    for (int k = 0; k < state.range(0); ++k) {
      std::vector<int> marked;
      for (int t = 0; t < m.num_triangles(); ++t)
        if (norm(m.centroid(t)) < 0.5) marked.push_back(t);
      m = bisect_marked(m, marked);
    }
    benchmark::DoNotOptimize(m.num_triangles());
  }
}
BENCHMARK(BM_BisectCorner)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
