// Copyright 2026 The End4 Authors
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
#include <torch/torch.h>

#include <random>
#include <vector>

#include "end4/denoiser.hpp"
#include "end4/detector.hpp"
#include "end4/diffusion.hpp"
#include "end4/metrics.hpp"
#include "end4/perturb.hpp"
#include "end4/run_config.hpp"
#include "end4/scene.hpp"

namespace {

void BM_ForwardNoise(benchmark::State& state) {
  const auto sched = end4::build_schedule(1000, 1e-4, 0.02);
  const auto x0 = torch::rand({8, 3, 64, 64});
  const auto eps = torch::randn({8, 3, 64, 64});
  const auto t = torch::randint(0, 1000, {8}, torch::kLong);
  for (auto _ : state) benchmark::DoNotOptimize(end4::forward_noise(x0, t, eps, sched));
}
BENCHMARK(BM_ForwardNoise);

void BM_DenoiserForward(benchmark::State& state) {
  torch::NoGradGuard guard;
  auto net = end4::init_denoiser(end4::desk_config().model.denoiser, 0);
  const auto x = torch::randn({state.range(0), 3, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(end4::predict_noise(net, x, 500));
}
BENCHMARK(BM_DenoiserForward)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_DetectorForward(benchmark::State& state) {
  torch::NoGradGuard guard;
  auto det = end4::init_detector(end4::desk_config().model.detector, 0);
  const auto x = torch::randn({8, 3, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(det->forward(x, x));
}
BENCHMARK(BM_DetectorForward)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<int> y(static_cast<size_t>(state.range(0)));
  std::vector<double> s(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<int>(i % 2);
    s[i] = std::uniform_real_distribution<double>()(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(end4::auc(y, s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auc)->Range(64, 1 << 16)->Complexity();

void BM_Perturbation(benchmark::State& state) {
  const auto image = end4::generate_scene(256, 3).image;
  const end4::Perturbation p{static_cast<end4::PerturbationKind>(state.range(0)),
                             state.range(0) == 0 ? 50.0 : 1.5};
  state.SetLabel(p.label());
  for (auto _ : state) benchmark::DoNotOptimize(end4::apply_perturbation(image, p));
}
BENCHMARK(BM_Perturbation)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
