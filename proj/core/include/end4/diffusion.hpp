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

#ifndef END4_DIFFUSION_HPP_
#define END4_DIFFUSION_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <vector>

namespace end4 {

// Per-step coefficients of the forward process. alpha_bars[t] is the
// cumulative product of alphas[0..t]; t is a 0-based index.
struct NoiseSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  int64_t steps() const { return static_cast<int64_t>(betas.size()); }

  // Throws IndexError when t is outside [0, steps()).
  double alpha_bar(int64_t t) const;

  // alpha_bars as a 1-D double tensor, for batched gathers.
  torch::Tensor alpha_bar_tensor() const;
};

struct ScheduleConfig {
  int64_t steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

// Linearly spaced betas in [beta_start, beta_end].
NoiseSchedule build_schedule(int64_t steps, double beta_start, double beta_end);
NoiseSchedule build_schedule(const ScheduleConfig& config);
NoiseSchedule schedule_from_betas(std::span<const double> betas);

// Training samples t from [1, T]; the schedule is indexed from 0.
inline int64_t schedule_index_for_step(int64_t t) { return t - 1; }

// x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.
torch::Tensor forward_noise(const torch::Tensor& x0, int64_t t,
                            const torch::Tensor& eps,
                            const NoiseSchedule& sched);
// Batched form: x0 is [B, ...] and t is an int64 tensor of B indices.
torch::Tensor forward_noise(const torch::Tensor& x0, const torch::Tensor& t,
                            const torch::Tensor& eps,
                            const NoiseSchedule& sched);

// x0_hat = (x_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t). Differentiable
// in eps_hat; no clamping so gradients reach the denoiser everywhere.
torch::Tensor one_step_denoise(const torch::Tensor& x_t, int64_t t,
                               const torch::Tensor& eps_hat,
                               const NoiseSchedule& sched);
torch::Tensor one_step_denoise(const torch::Tensor& x_t, const torch::Tensor& t,
                               const torch::Tensor& eps_hat,
                               const NoiseSchedule& sched);

// Deterministic reverse update written with cumulative coefficients:
//   x_prev = sqrt(abar_prev) * (x_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t)
//            + sqrt(1 - abar_prev) * noise
// Reference path only; the detector reconstructs with one_step_denoise.
torch::Tensor reverse_step(const torch::Tensor& x_t,
                           const torch::Tensor& eps_hat,
                           const torch::Tensor& noise, double alpha_bar_t,
                           double alpha_bar_prev);

// Requires 1 <= t < T.
torch::Tensor ddim_reverse_step(const torch::Tensor& x_t, int64_t t,
                                const torch::Tensor& eps_hat,
                                const NoiseSchedule& sched,
                                const torch::Tensor& noise);

}  // namespace end4

#endif  // END4_DIFFUSION_HPP_
