#include "fracext/afem.hpp"
#include "fracext/assembly.hpp"
#include "fracext/caputo.hpp"
#include "fracext/mesh.hpp"
#include "fracext/sparse.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace fracext;

namespace {

constexpr double kS = 0.3;

TensorMesh square_mesh(int cells) {
  return build_tensor(uniform_base(2, cells), graded_points(cells, default_grading(kS), 1.5));
}

TensorMesh line_mesh(int cells) {
  return build_tensor(uniform_base(1, cells), graded_points(cells, default_grading(kS), 1.5));
}

FieldVector random_field(std::size_t n) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FieldVector v(n);
  for (double &x : v)
    x = u(gen);
  return v;
}

void BM_Spmv(benchmark::State &state) {
  const TensorMesh mesh = square_mesh(static_cast<int>(state.range(0)));
  const CsrMatrix a = assemble_stiffness(mesh, 1.0 - 2.0 * kS);
  const FieldVector x = random_field(a.rows);
  FieldVector y(a.rows);
  for (auto _ : state) {
    kernels::spmv(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(a.nnz()));
}

void BM_SpmvSerial(benchmark::State &state) {
  const TensorMesh mesh = square_mesh(static_cast<int>(state.range(0)));
  const CsrMatrix a = assemble_stiffness(mesh, 1.0 - 2.0 * kS);
  const FieldVector x = random_field(a.rows);
  FieldVector y(a.rows);
  for (auto _ : state) {
    kernels::serial::spmv(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(a.nnz()));
}

void BM_Assembly(benchmark::State &state) {
  const TensorMesh mesh = square_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_stiffness(mesh, 1.0 - 2.0 * kS));
}

void BM_AssemblySerial(benchmark::State &state) {
  const TensorMesh mesh = square_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(serial::assemble_stiffness(mesh, 1.0 - 2.0 * kS));
}

std::vector<FieldVector> history(std::size_t n, int steps) {
  std::vector<FieldVector> h;
  for (int k = 0; k <= steps; ++k)
    h.push_back(random_field(n));
  return h;
}

void BM_MemoryTerm(benchmark::State &state) {
  const int steps = static_cast<int>(state.range(0));
  const auto h = history(20000, steps);
  const CaputoWeights w = caputo_weights(0.5, 1.0 / steps, steps + 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(memory_term(h, w));
}

void BM_MemoryTermSerial(benchmark::State &state) {
  const int steps = static_cast<int>(state.range(0));
  const auto h = history(20000, steps);
  const CaputoWeights w = caputo_weights(0.5, 1.0 / steps, steps + 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(serial::memory_term(h, w));
}

const SpatialFunction kLoad = [](double x, double) { return std::sin(3.0 * x) + 1.0; };

void BM_Estimate(benchmark::State &state) {
  const TensorMesh mesh = line_mesh(static_cast<int>(state.range(0)));
  const FieldVector v = random_field(mesh.num_dofs());
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate(mesh, v, kLoad, kS));
}

void BM_EstimateSerial(benchmark::State &state) {
  const TensorMesh mesh = line_mesh(static_cast<int>(state.range(0)));
  const FieldVector v = random_field(mesh.num_dofs());
  for (auto _ : state)
    benchmark::DoNotOptimize(serial::estimate(mesh, v, kLoad, kS));
}

} // namespace

BENCHMARK(BM_Spmv)->Arg(32)->Arg(64);
BENCHMARK(BM_SpmvSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_Assembly)->Arg(32)->Arg(64);
BENCHMARK(BM_AssemblySerial)->Arg(32)->Arg(64);
BENCHMARK(BM_MemoryTerm)->Arg(64)->Arg(256);
BENCHMARK(BM_MemoryTermSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_Estimate)->Arg(64)->Arg(256);
BENCHMARK(BM_EstimateSerial)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
