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

#include "end4/diffusion.hpp"

#include <cmath>
#include <sstream>

#include "end4/errors.hpp"

namespace end4 {
namespace {

void CheckSameShape(const torch::Tensor& a, const torch::Tensor& b,
                    const char* what) {
  if (a.sizes() != b.sizes()) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw ShapeError(os.str());
  }
}

// Per-sample coefficient broadcast over the trailing dims of `like`.
torch::Tensor Broadcastable(const torch::Tensor& per_sample,
                            const torch::Tensor& like) {
  std::vector<int64_t> shape(like.dim(), 1);
  shape[0] = per_sample.size(0);
  return per_sample.to(like.scalar_type()).view(shape);
}

torch::Tensor GatherAlphaBars(const torch::Tensor& t,
                              const NoiseSchedule& sched) {
  if (t.dim() != 1) throw ShapeError("time-step tensor must be 1-D");
  auto t64 = t.to(torch::kLong).cpu();
  if (t64.numel() > 0) {
    const auto lo = t64.min().item<int64_t>();
    const auto hi = t64.max().item<int64_t>();
    if (lo < 0 || hi >= sched.steps()) {
      throw IndexError("time step out of range [0, " +
                       std::to_string(sched.steps()) + ")");
    }
  }
  return sched.alpha_bar_tensor().index_select(0, t64);
}

}  // namespace

double NoiseSchedule::alpha_bar(int64_t t) const {
  if (t < 0 || t >= steps()) {
    throw IndexError("time step " + std::to_string(t) + " out of range [0, " +
                     std::to_string(steps()) + ")");
  }
  return alpha_bars[static_cast<size_t>(t)];
}

torch::Tensor NoiseSchedule::alpha_bar_tensor() const {
  return torch::tensor(alpha_bars, torch::kDouble);
}

NoiseSchedule schedule_from_betas(std::span<const double> betas) {
  if (betas.empty()) throw ParameterError("schedule needs at least one step");
  NoiseSchedule s;
  s.betas.assign(betas.begin(), betas.end());
  s.alphas.reserve(betas.size());
  s.alpha_bars.reserve(betas.size());
  double running = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) {
      throw ParameterError("beta values must lie in (0, 1)");
    }
    s.alphas.push_back(1.0 - b);
    running *= 1.0 - b;
    s.alpha_bars.push_back(running);
  }
  return s;
}

NoiseSchedule build_schedule(int64_t steps, double beta_start,
                             double beta_end) {
  if (steps < 1) throw ParameterError("schedule step count must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ParameterError("need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<size_t>(steps));
  for (int64_t i = 0; i < steps; ++i) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[static_cast<size_t>(i)] = beta_start + frac * (beta_end - beta_start);
  }
  return schedule_from_betas(betas);
}

NoiseSchedule build_schedule(const ScheduleConfig& config) {
  return build_schedule(config.steps, config.beta_start, config.beta_end);
}

torch::Tensor forward_noise(const torch::Tensor& x0, int64_t t,
                            const torch::Tensor& eps,
                            const NoiseSchedule& sched) {
  CheckSameShape(x0, eps, "forward_noise");
  const double abar = sched.alpha_bar(t);
  return x0 * std::sqrt(abar) + eps * std::sqrt(1.0 - abar);
}

torch::Tensor forward_noise(const torch::Tensor& x0, const torch::Tensor& t,
                            const torch::Tensor& eps,
                            const NoiseSchedule& sched) {
  CheckSameShape(x0, eps, "forward_noise");
  if (t.size(0) != x0.size(0)) throw ShapeError("one time step per sample");
  const auto abar = GatherAlphaBars(t, sched);
  const auto signal = Broadcastable(abar.sqrt(), x0);
  const auto noise = Broadcastable((1.0 - abar).sqrt(), x0);
  return x0 * signal + eps * noise;
}

torch::Tensor one_step_denoise(const torch::Tensor& x_t, int64_t t,
                               const torch::Tensor& eps_hat,
                               const NoiseSchedule& sched) {
  CheckSameShape(x_t, eps_hat, "one_step_denoise");
  const double abar = sched.alpha_bar(t);
  return (x_t - eps_hat * std::sqrt(1.0 - abar)) / std::sqrt(abar);
}

torch::Tensor one_step_denoise(const torch::Tensor& x_t, const torch::Tensor& t,
                               const torch::Tensor& eps_hat,
                               const NoiseSchedule& sched) {
  CheckSameShape(x_t, eps_hat, "one_step_denoise");
  if (t.size(0) != x_t.size(0)) throw ShapeError("one time step per sample");
  const auto abar = GatherAlphaBars(t, sched);
  const auto signal = Broadcastable(abar.sqrt(), x_t);
  const auto noise = Broadcastable((1.0 - abar).sqrt(), x_t);
  return (x_t - eps_hat * noise) / signal;
}

torch::Tensor reverse_step(const torch::Tensor& x_t,
                           const torch::Tensor& eps_hat,
                           const torch::Tensor& noise, double alpha_bar_t,
                           double alpha_bar_prev) {
  CheckSameShape(x_t, eps_hat, "reverse_step");
  CheckSameShape(x_t, noise, "reverse_step");
  const auto x0_hat =
      (x_t - eps_hat * std::sqrt(1.0 - alpha_bar_t)) / std::sqrt(alpha_bar_t);
  return x0_hat * std::sqrt(alpha_bar_prev) +
         noise * std::sqrt(1.0 - alpha_bar_prev);
}

torch::Tensor ddim_reverse_step(const torch::Tensor& x_t, int64_t t,
                                const torch::Tensor& eps_hat,
                                const NoiseSchedule& sched,
                                const torch::Tensor& noise) {
  if (t < 1 || t >= sched.steps()) {
    throw IndexError("reverse step needs 1 <= t < T, got " + std::to_string(t));
  }
  return reverse_step(x_t, eps_hat, noise, sched.alpha_bar(t),
                      sched.alpha_bar(t - 1));
}

}  // namespace end4
