// Copyright 2026 The lindtomo Authors
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

// Serial reference against OpenMP kernel for each parallel hot path.
// Arg(0) runs Execution::kSerial, Arg(1) Execution::kParallel.

#include <cstdint>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "lindtomo/elt.hpp"
#include "lindtomo/fitting.hpp"
#include "lindtomo/harness.hpp"
#include "lindtomo/rng.hpp"
#include "lindtomo/slt.hpp"
#include "lindtomo/transfer_matrix.hpp"

using namespace lindtomo;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

std::vector<double> grid(int count, double t_max) {
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = t_max * k / (count - 1);
  return t;
}

void BM_AcquireElt(benchmark::State& state) {
  const LindbladModel m = make_preset("two-local", 2, 1);
  const EltPlan plan = make_elt_plan(2, grid(5, 1.0), 200);
  const NoiseModel noise = NoiseModel::uniform(2, 0.01, 0.02, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(acquire_elt(plan, m, noise, 7, exec_of(state)));
}
BENCHMARK(BM_AcquireElt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulateSlt(benchmark::State& state) {
  const LindbladModel m = make_preset("two-local", 3, 1);
  const NoiseModel noise = NoiseModel::uniform(3, 0.01, 0.02, 0.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_slt(m, noise, grid(4, 1.0), 20000, 7, exec_of(state)));
}
BENCHMARK(BM_SimulateSlt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PtmBatch(benchmark::State& state) {
  const int n = 3;
  const LindbladModel m = make_preset("two-local", n, 1);
  const ShadowDataset data = simulate_slt(m, NoiseModel::ideal(n), {0.5}, 200000, 3);
  std::vector<PauliPair> pairs;
  for (const auto& p : enumerate_paulis(n))
    for (const auto& q : enumerate_paulis(n))
      if (weight(p) + weight(q) <= 3) pairs.emplace_back(p, q);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_ptm_batch(data.shots[0], pairs, 0.5, exec_of(state)));
  state.counters["pairs"] = static_cast<double>(pairs.size());
}
BENCHMARK(BM_PtmBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BuildTransferMatrix(benchmark::State& state) {
  const auto tmpl = std::make_shared<const ModelTemplate>(ModelTemplate::local(4, 2));
  const auto probes = pauli_probe_set(*tmpl);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_transfer_matrix(tmpl, probes, exec_of(state)));
}
BENCHMARK(BM_BuildTransferMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EstimateFromSeries(benchmark::State& state) {
  const auto tmpl = std::make_shared<const ModelTemplate>(ModelTemplate::full(2));
  const auto count = static_cast<Eigen::Index>(tmpl->param_count());
  Stream rng(derive_key(11, StreamDomain::kAcquisition, 0, 0));
  SignalSeries s;
  s.times = grid(20, 1.0);
  s.values.resize(20, count);
  s.stderrs.setConstant(20, count, 0.01);
  for (Eigen::Index c = 0; c < count; ++c)
    for (Eigen::Index k = 0; k < 20; ++k) s.values(k, c) = 0.1 * s.times[k] + 0.01 * rng.normal();
  FitOptions options;
  options.method = static_cast<FitMethod>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_from_series(s, tmpl, options, "bench", exec_of(state)));
}
BENCHMARK(BM_EstimateFromSeries)
    ->ArgsProduct({{0, 1}, {0, 1}})
    ->ArgNames({"parallel", "robust"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
