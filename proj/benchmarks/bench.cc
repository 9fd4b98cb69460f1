// Copyright 2026 The PerturbOpt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <cstddef>

#include "perturbopt/ao.h"
#include "perturbopt/btl.h"
#include "perturbopt/expansions.h"
#include "perturbopt/linalg.h"
#include "perturbopt/matrix.h"
#include "perturbopt/objective.h"
#include "perturbopt/rng.h"

namespace perturbopt {
namespace {

SymMatrix RandomSpd(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g(i, j) = rng.Normal();
  }
  Matrix a = MatTMul(g, g);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
  return SymMatrix(a);
}

BtlObservation RandomObservation(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  const ComparisonGraph g = SampleErGraph(n, p, 1, rng);
  return SampleOutcomes(g, SampleScores(n, 0.0, 2.0, rng), rng);
}

void BM_Cholesky(benchmark::State& state) {
  const SymMatrix a = RandomSpd(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(Cholesky::Factor(a));
}
BENCHMARK(BM_Cholesky)->Arg(50)->Arg(200);

void BM_SymEig(benchmark::State& state) {
  const SymMatrix a = RandomSpd(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(SymEig(a));
}
BENCHMARK(BM_SymEig)->Arg(20)->Arg(100);

void BM_BtlNewton(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const BtlObservation obs = RandomObservation(n, 0.5, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        FitPenalizedMle(obs, PenaltySpec::MeanShift(1.0), MleSolver::kNewton));
  }
}
BENCHMARK(BM_BtlNewton)->Arg(50)->Arg(200);

void BM_AoRun(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const BtlObservation obs = RandomObservation(n, 0.8, 4);
  const BtlObjective f(obs, PenaltySpec::MeanShift(1.0));
  const BlockSplit split = BlockSplit::Halves(n);
  AoOptions opts;
  opts.steps = 10;
  opts.joint_minimizer = SolveJointMinimizer(f);
  const Vector theta0(split.p(), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(AoRun(f, split, theta0, opts));
}
BENCHMARK(BM_AoRun)->Arg(20)->Arg(40);

void BM_RhoStarSup(benchmark::State& state) {
  const std::size_t q = state.range(0);
  Rng rng(5);
  Matrix ftn(3, q);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < q; ++j) ftn(i, j) = rng.Normal();
  }
  const MetricTensor d = MetricTensor::Identity(3);
  const MetricTensor h = MetricTensor::Identity(q);
  for (auto _ : state) {
    benchmark::DoNotOptimize(RhoStar(ftn, d, h, NormTag::kLInf));
  }
}
BENCHMARK(BM_RhoStarSup)->Arg(10)->Arg(16);

void BM_BtlConstantsSup(benchmark::State& state) {
  const std::size_t n = state.range(0);
  Rng rng(6);
  const ComparisonGraph g = SampleErGraph(n, 0.3, 1, rng);
  const ScoreVector u = SampleScores(n, 0.0, 2.0, rng);
  const MetricTensor d = MetricTensor::SqrtDiagonalOf(
      BtlFisher(g, PenaltySpec::MeanShift(1.0), u.values()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        BtlConditionConstants(g, PenaltySpec::MeanShift(1.0), u,
                              Radii::Uniform(0.1), d, NormTag::kLInf));
  }
}
BENCHMARK(BM_BtlConstantsSup)->Arg(50)->Arg(100);

}  // namespace
}  // namespace perturbopt

BENCHMARK_MAIN();
