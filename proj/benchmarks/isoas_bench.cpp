#include <random>
#include <string>

#include <Eigen/Dense>
#include <benchmark/benchmark.h>

#include "isoas/geometry.hpp"
#include "isoas/io.hpp"
#include "isoas/isoas.hpp"
#include "isoas/lp.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

isoas::Polyhedron RandomPolytope(int dim, int cuts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(0.3, 1.5);
  MatrixXd H(cuts, dim);
  VectorXd h(cuts);
  for (int i = 0; i < cuts; ++i) {
    for (int j = 0; j < dim; ++j) H(i, j) = normal(rng);
    h(i) = uni(rng);
  }
  return isoas::Polyhedron(H, h);
}

isoas::Problem Load(const std::string& name) {
  return isoas::LoadProblem(std::string(ISOAS_CONFIG_DIR) + "/" + name +
                            ".json");
}

void BM_SolveLp(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const isoas::Polyhedron p = RandomPolytope(3, rows, 1);
  const VectorXd c = VectorXd::Ones(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoas::SolveLp(c, p.H(), p.h()));
  }
}
BENCHMARK(BM_SolveLp)->Arg(16)->Arg(64)->Arg(256);

void BM_ReduceRepresentation(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const isoas::Polyhedron p = RandomPolytope(3, rows, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoas::ReduceRepresentation(p));
  }
}
BENCHMARK(BM_ReduceRepresentation)->Arg(16)->Arg(64)->Arg(256);

void BM_ComputeMoas(benchmark::State& state) {
  const isoas::Problem p = Load("example2");
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        isoas::ComputeMoas(p.loop, p.spec.outc, p.spec.config));
  }
}
BENCHMARK(BM_ComputeMoas)->Unit(benchmark::kMillisecond);

void BM_ComputeIsoas(benchmark::State& state) {
  static const char* kNames[] = {"example1", "example2", "example3"};
  const isoas::Problem p = Load(kNames[state.range(0)]);
  state.SetLabel(kNames[state.range(0)]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        isoas::ComputeIsoas(p.loop, p.spec.outc, p.spec.config));
  }
}
BENCHMARK(BM_ComputeIsoas)
    ->DenseRange(0, 2)
    ->Unit(benchmark::kMillisecond)
    ->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
