#include <benchmark/benchmark.h>

#include "mrcs/covariance.hpp"
#include "mrcs/kernel.hpp"
#include "mrcs/lasso.hpp"
#include "mrcs/simulation.hpp"
#include "mrcs/solvers.hpp"

namespace {

using namespace mrcs;

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  auto rng = CounterRng::stream(seed, "bench");
  Matrix M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.normal();
  return M;
}

SimulatedData scenario_data(int n, int p, int q) {
  Scenario sc;
  sc.n = n;
  sc.p = p;
  sc.q = q;
  sc.seed = 11;
  return replicate_dataset(sc, 0);
}

void BM_StructuredTrace(benchmark::State& state) {
  const auto q = state.range(0);
  const Matrix R = normal_matrix(200, q, 1);
  const CsParams cs{1.0, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(structured_trace(R, cs));
  state.SetComplexityN(q);
}
BENCHMARK(BM_StructuredTrace)->RangeMultiplier(4)->Range(8, 512)->Complexity();

void BM_DenseTrace(benchmark::State& state) {
  const auto q = state.range(0);
  const Matrix R = normal_matrix(200, q, 1);
  const Matrix omega = precision_dense(CsParams{1.0, 0.9}, q);
  for (auto _ : state) benchmark::DoNotOptimize((R.transpose() * R * omega).trace());
  state.SetComplexityN(q);
}
BENCHMARK(BM_DenseTrace)->RangeMultiplier(4)->Range(8, 512)->Complexity();

void BM_UpdateCs(benchmark::State& state) {
  const Matrix R = normal_matrix(state.range(0), 50, 2);
  for (auto _ : state) benchmark::DoNotOptimize(update_cs(R));
}
BENCHMARK(BM_UpdateCs)->Arg(50)->Arg(500);

void BM_ThetaLineSearch(benchmark::State& state) {
  const Matrix R = normal_matrix(100, state.range(0), 3);
  const Vector etas = Vector::Ones(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(update_theta_line_search(R, etas));
}
BENCHMARK(BM_ThetaLineSearch)->Arg(20)->Arg(80);

// B step at theta = 0.9: row-block solver on the structured precision versus
// scalar coordinate descent on the dense matrix.
void BM_BStepStructured(benchmark::State& state) {
  const auto sim = scenario_data(50, 20, 50);
  const CsParams cs{1.0, 0.9};
  const auto omega = structured_precision(cs, 50);
  const PenaltySpec pen{0.05, {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_penalized_B(sim.train, omega, pen, Matrix::Zero(20, 50)));
  }
}
BENCHMARK(BM_BStepStructured)->Unit(benchmark::kMillisecond);

void BM_BStepDense(benchmark::State& state) {
  const auto sim = scenario_data(50, 20, 50);
  const Matrix omega = precision_dense(CsParams{1.0, 0.9}, 50);
  const PenaltySpec pen{0.05, {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_penalized_B(sim.train, omega, pen, Matrix::Zero(20, 50)));
  }
}
BENCHMARK(BM_BStepDense)->Unit(benchmark::kMillisecond);

void BM_FitMrcs(benchmark::State& state) {
  const auto sim = scenario_data(50, 20, 50);
  SolverConfig cfg;
  const Matrix B0 = initial_B(sim.train, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_mrcs(sim.train, PenaltySpec{0.05, {}}, cfg, B0));
  }
}
BENCHMARK(BM_FitMrcs)->Unit(benchmark::kMillisecond);

void BM_FitMrgcs(benchmark::State& state) {
  const auto sim = scenario_data(50, 20, 50);
  SolverConfig cfg;
  const Matrix B0 = initial_B(sim.train, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_mrgcs(sim.train, PenaltySpec{0.05, {}}, cfg, B0));
  }
}
BENCHMARK(BM_FitMrgcs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
