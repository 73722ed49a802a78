// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP counterparts.

#include "sfsvd/fields.hpp"
#include "sfsvd/kernels.hpp"
#include "sfsvd/netcore.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace sfsvd;

Matrix samples(Eigen::Index dim, Eigen::Index n) {
  std::srand(7);
  return Matrix::Random(dim, n);
}

void BM_MeanOuter(benchmark::State& state, Exec exec) {
  const Matrix a = samples(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::mean_outer(a, a, exec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_CentralDifference(benchmark::State& state, Exec exec) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const GridField f = gen_grf(3, unit_grid(1, n, n), 8, 1.5);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    if (exec == Exec::parallel) {
      kernels::central_difference_omp(std::span<const double>(f.data.data(), n * n), out, n, n, true, 0.5);
    } else {
      kernels::central_difference_serial(std::span<const double>(f.data.data(), n * n), out, n, n, true,
                                         0.5);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PredictBatch(benchmark::State& state, Exec exec) {
  ModelSpec spec;
  spec.input_dim = 256;
  spec.output_dim = 256;
  spec.hidden = {static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0))};
  const SequentialModel model = random_model(spec, 11);
  std::vector<Vector> xs;
  for (int i = 0; i < 256; ++i) xs.push_back(Vector::Random(256));
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch(model, xs, exec));
  state.SetItemsProcessed(state.iterations() * 256);
}

}  // namespace

BENCHMARK_CAPTURE(BM_MeanOuter, serial, Exec::serial)->Args({256, 4096})->Args({512, 2048});
BENCHMARK_CAPTURE(BM_MeanOuter, omp, Exec::parallel)->Args({256, 4096})->Args({512, 2048});
BENCHMARK_CAPTURE(BM_CentralDifference, serial, Exec::serial)->Arg(16)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_CentralDifference, omp, Exec::parallel)->Arg(16)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_PredictBatch, serial, Exec::serial)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(BM_PredictBatch, omp, Exec::parallel)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
