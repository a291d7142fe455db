#include <benchmark/benchmark.h>

#include <random>

#include "renyiqkd/divergence.hpp"
#include "renyiqkd/keyrate.hpp"
#include "renyiqkd/optimizer.hpp"

using namespace renyiqkd;

namespace {

Matrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  return hermitian_part(a);
}

void BM_DivergenceValue(benchmark::State& state) {
  const RenyiObjective obj(beta_of_alpha(1.1), key_map_kraus(0.08));
  const Matrix rho = initial_point_rho(0.1);
  const Matrix sigma = Matrix::Identity(8, 8) / 8.0;
  for (auto _ : state) benchmark::DoNotOptimize(obj.value(rho, sigma));
}
BENCHMARK(BM_DivergenceValue);

void BM_DivergenceEvaluate(benchmark::State& state) {
  const RenyiObjective obj(beta_of_alpha(1.1), key_map_kraus(0.08));
  const Matrix rho = initial_point_rho(0.1);
  const Matrix sigma = Matrix::Identity(8, 8) / 8.0;
  for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(rho, sigma));
}
BENCHMARK(BM_DivergenceEvaluate);

void BM_FrechetPower(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Matrix a = random_hermitian(8, rng);
  const Matrix y = a * a + Matrix::Identity(8, 8);
  const Matrix delta = random_hermitian(8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(frechet_power(y, 0.3, delta));
}
BENCHMARK(BM_FrechetPower);

void BM_LmoRho(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const FeasibleSet fs = rho_feasible_set(0.1);
  const Matrix c = random_hermitian(4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lmo_rho(c, fs));
}
BENCHMARK(BM_LmoRho);

void BM_FrankWolfeCertified(benchmark::State& state) {
  ProtocolParams params;
  params.p = 0.11;
  params.q = 0.08;
  params.alpha = 1.0 + state.range(0) / 1000.0;
  SolverOptions opts;
  opts.random_restarts = 0;
  for (auto _ : state) benchmark::DoNotOptimize(frank_wolfe(params, opts));
}
BENCHMARK(BM_FrankWolfeCertified)->Arg(1)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_FrankWolfeColdStart(benchmark::State& state) {
  const RenyiObjective obj(beta_of_alpha(1.3), key_map_kraus(0.1));
  const FeasibleSet fs = rho_feasible_set(0.07);
  SolverOptions opts;
  opts.max_iter = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        frank_wolfe_from(obj, fs, initial_point_rho(0.07), Matrix::Identity(8, 8) / 8.0, opts));
  }
}
BENCHMARK(BM_FrankWolfeColdStart)->Unit(benchmark::kMillisecond);

void BM_OptimizeQ(benchmark::State& state) {
  for (auto _ : state) {
    const KeyRateEngine engine;
    benchmark::DoNotOptimize(engine.optimize_q(1'000'000, 1.02, 0.11));
  }
}
BENCHMARK(BM_OptimizeQ)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
