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

#include <gtest/gtest.h>
#include <torch/torch.h>

#include <cfloat>
#include <cmath>
#include <vector>

#include "end4/diffusion.hpp"
#include "end4/errors.hpp"

namespace end4 {
namespace {

TEST(Schedule, SingleStep) {
  const auto s = build_schedule(1, 0.5, 0.5);
  ASSERT_EQ(s.steps(), 1);
  EXPECT_EQ(s.alpha_bars[0], 0.5);
}

TEST(Schedule, TwoExplicitBetas) {
  const std::vector<double> betas{0.1, 0.2};
  const auto s = schedule_from_betas(betas);
  EXPECT_DOUBLE_EQ(s.alpha_bars[0], 0.9);
  EXPECT_NEAR(s.alpha_bars[1], 0.72, 1e-15);
}

TEST(Schedule, LinearDefaultMatchesProductLoop) {
  const auto s = build_schedule(1000, 1e-4, 0.02);
  double prod = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double beta = 1e-4 + (0.02 - 1e-4) * i / 999.0;
    prod *= 1.0 - beta;
  }
  EXPECT_NEAR(s.alpha_bars[999], prod, 1e-12 * prod);
  for (int t = 1; t < 1000; ++t) {
    EXPECT_LT(s.alpha_bars[t], s.alpha_bars[t - 1]);
    EXPECT_GT(s.alpha_bars[t], 0.0);
    EXPECT_NEAR(s.alpha_bars[t], s.alpha_bars[t - 1] * s.alphas[t], 1e-12 * s.alpha_bars[t]);
  }
}

TEST(Schedule, RejectsBadRanges) {
  EXPECT_THROW(build_schedule(0, 1e-4, 0.02), ParameterError);
  EXPECT_THROW(build_schedule(10, 0.0, 0.02), ParameterError);
  EXPECT_THROW(build_schedule(10, 0.03, 0.02), ParameterError);
  EXPECT_THROW(build_schedule(10, 1e-4, 1.0), ParameterError);
  const auto s = build_schedule(10, 1e-4, 0.02);
  EXPECT_THROW(s.alpha_bar(10), IndexError);
  EXPECT_THROW(s.alpha_bar(-1), IndexError);
}

TEST(ForwardNoise, ScalarArithmetic) {
  const std::vector<double> betas{0.75};
  const auto s = schedule_from_betas(betas);
  const auto x = forward_noise(torch::ones({1}), 0, torch::zeros({1}), s);
  EXPECT_FLOAT_EQ(x.item<float>(), 0.5f);
  const auto x0 = one_step_denoise(torch::full({1}, 0.5), 0, torch::zeros({1}), s);
  EXPECT_FLOAT_EQ(x0.item<float>(), 1.0f);
}

TEST(ForwardNoise, NoiselessLimit) {
  const std::vector<double> betas{1e-9};
  const auto s = schedule_from_betas(betas);
  const auto x0 = torch::rand({3, 8, 8}) * 2 - 1;
  const auto x = forward_noise(x0, 0, torch::zeros_like(x0), s);
  EXPECT_LT((x - x0).abs().max().item<float>(), 1e-6);
}

TEST(ForwardNoise, MatchesStraightLineEvaluation) {
  torch::manual_seed(7);
  const auto s = build_schedule(1000, 1e-4, 0.02);
  const auto x0 = (torch::rand({3, 16, 16}) * 2 - 1).contiguous();
  const auto eps = torch::randn({3, 16, 16}).contiguous();
  const int64_t t = torch::randint(0, 1000, {1}).item<int64_t>();
  const auto xt = forward_noise(x0, t, eps, s).contiguous();
  double abar = 1.0;
  for (int64_t i = 0; i <= t; ++i) abar *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / 999.0);
  const float a = static_cast<float>(std::sqrt(abar));
  const float b = static_cast<float>(std::sqrt(1.0 - abar));
  const float* px = x0.data_ptr<float>();
  const float* pe = eps.data_ptr<float>();
  const float* pt = xt.data_ptr<float>();
  int mismatches = 0;
  for (int64_t i = 0; i < x0.numel(); ++i) {
    const float ax = px[i] * a;
    const float be = pe[i] * b;
    mismatches += (ax + be) != pt[i];
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(ForwardNoise, RejectsOutOfRangeStep) {
  const auto s = build_schedule(10, 1e-4, 0.02);
  const auto x = torch::zeros({3, 4, 4});
  EXPECT_THROW(forward_noise(x, 10, x, s), IndexError);
  EXPECT_THROW(one_step_denoise(x, -1, x, s), IndexError);
  EXPECT_THROW(forward_noise(x, 0, torch::zeros({3, 4, 5}), s), ShapeError);
}

TEST(OneStepDenoise, InvertsForwardNoise) {
  torch::manual_seed(11);
  const auto s = build_schedule(1000, 1e-4, 0.02);
  for (int64_t t : {0, 1, 250, 500, 999}) {
    const auto x0 = torch::rand({3, 32, 32}) * 2 - 1;
    const auto eps = torch::randn({3, 32, 32});
    const auto xt = forward_noise(x0, t, eps, s);
    const auto back = one_step_denoise(xt, t, eps, s);
    // Rounding of x_t is amplified by 1/sqrt(abar), which reaches ~156 at the last step.
    const double bound = t <= 500 ? 1e-5
                                  : 4 * FLT_EPSILON * (1 + xt.abs().max().item<double>()) /
                                        std::sqrt(s.alpha_bar(t));
    EXPECT_LT((back - x0).abs().max().item<float>(), bound) << "t=" << t;
    const auto x0d = x0.to(torch::kDouble);
    const auto epsd = eps.to(torch::kDouble);
    const auto backd = one_step_denoise(forward_noise(x0d, t, epsd, s), t, epsd, s);
    EXPECT_LT((backd - x0d).abs().max().item<double>(), 1e-10) << "t=" << t;
  }
}

TEST(OneStepDenoise, BatchedMatchesScalar) {
  torch::manual_seed(12);
  const auto s = build_schedule(1000, 1e-4, 0.02);
  const auto x0 = torch::rand({4, 3, 8, 8}) * 2 - 1;
  const auto eps = torch::randn({4, 3, 8, 8});
  const auto t = torch::tensor({0, 10, 500, 999}, torch::kLong);
  const auto xt = forward_noise(x0, t, eps, s);
  for (int64_t i = 0; i < 4; ++i) {
    const auto single = forward_noise(x0[i], t[i].item<int64_t>(), eps[i], s);
    EXPECT_LT((xt[i] - single).abs().max().item<float>(), 1e-6);
  }
  EXPECT_THROW(forward_noise(x0, torch::tensor({1, 2}, torch::kLong), eps, s), ShapeError);
}

TEST(OneStepDenoise, OffsetPropagatesLinearly) {
  const auto s = build_schedule(1000, 1e-4, 0.02);
  const int64_t t = 300;
  const auto x0 = (torch::rand({3, 8, 8}) * 2 - 1).to(torch::kDouble);
  const auto eps = torch::randn({3, 8, 8}, torch::kDouble);
  const auto delta = torch::randn({3, 8, 8}, torch::kDouble) * 0.1;
  const auto xhat = one_step_denoise(forward_noise(x0, t, eps, s), t, eps + delta, s);
  const double abar = s.alpha_bar(t);
  const auto expected = x0 - std::sqrt(1 - abar) / std::sqrt(abar) * delta;
  EXPECT_LT((xhat - expected).abs().max().item<double>(), 1e-12);
}

TEST(OneStepDenoise, GradientWithRespectToPrediction) {
  const auto s = build_schedule(1000, 1e-4, 0.02);
  const int64_t t = 700;
  const auto xt = torch::randn({5}, torch::kDouble);
  auto eps_hat = torch::randn({5}, torch::kDouble).requires_grad_(true);
  one_step_denoise(xt, t, eps_hat, s).sum().backward();
  const double abar = s.alpha_bar(t);
  const double expected = -std::sqrt(1 - abar) / std::sqrt(abar);
  const double h = 1e-6;
  for (int64_t i = 0; i < 5; ++i) {
    const double analytic = eps_hat.grad()[i].item<double>();
    EXPECT_NEAR(analytic, expected, 1e-12 * std::abs(expected));
    auto plus = eps_hat.detach().clone();
    auto minus = eps_hat.detach().clone();
    plus[i] += h;
    minus[i] -= h;
    const double numeric = (one_step_denoise(xt, t, plus, s).sum().item<double>() -
                            one_step_denoise(xt, t, minus, s).sum().item<double>()) /
                           (2 * h);
    EXPECT_NEAR(numeric, expected, 1e-6 * std::abs(expected));
  }
}

TEST(ForwardNoise, ExpectedCorruptionEnergy) {
  torch::manual_seed(3);
  const auto s = build_schedule(1000, 1e-4, 0.02);
  const int64_t t = 400;
  const int64_t n = 16;
  const int draws = 10000;
  const auto x0 = torch::rand({n}, torch::kDouble) * 2 - 1;
  const double abar = s.alpha_bar(t);
  const auto eps = torch::randn({draws, n}, torch::kDouble);
  const auto xt = x0.unsqueeze(0) * std::sqrt(abar) + eps * std::sqrt(1 - abar);
  const auto d2 = (xt - std::sqrt(abar) * x0.unsqueeze(0)).pow(2).sum(1);
  const double mean = d2.mean().item<double>();
  const double expected = (1 - abar) * n;
  // Var of a scaled chi-square with n dof is 2 n (1 - abar)^2.
  const double sigma = std::sqrt(2.0 * n) * (1 - abar) / std::sqrt(draws);
  EXPECT_NEAR(mean, expected, 3 * sigma);
  const auto lib = forward_noise(x0.unsqueeze(0).expand({draws, n}).contiguous(),
                                 torch::full({draws}, t, torch::kLong), eps, s);
  EXPECT_LT((lib - xt).abs().max().item<double>(), 1e-12);
}

TEST(ReverseStep, ChainRecoversConstantImage) {
  const auto s = build_schedule(1000, 1e-4, 0.02);
  const auto x0 = torch::full({3, 4, 4}, 0.3, torch::kFloat);
  torch::manual_seed(5);
  const auto eps = torch::randn({3, 4, 4});
  const int64_t start = 200;
  auto x = forward_noise(x0, start, eps, s);
  auto eps_t = eps;
  for (int64_t t = start; t >= 1; --t) {
    x = ddim_reverse_step(x, t, eps_t, s, torch::zeros_like(x));
    // Noise implied by the current state.
    eps_t = (x - std::sqrt(s.alpha_bar(t - 1)) * x0) / std::sqrt(1 - s.alpha_bar(t - 1));
  }
  const auto recovered = one_step_denoise(x, 0, eps_t, s);
  EXPECT_LT((recovered - x0).abs().max().item<float>(), 1e-4);
}

TEST(ReverseStep, DegenerateCoefficientsAreIdentity) {
  const auto x = torch::randn({3, 4, 4});
  const auto z = torch::zeros_like(x);
  const auto out = reverse_step(x, z, z, 0.6, 0.6);
  EXPECT_LT((out - x).abs().max().item<float>(), 1e-6);
}

TEST(ReverseStep, MatchesStraightLineEvaluation) {
  const auto s = build_schedule(1000, 1e-4, 0.02);
  torch::manual_seed(9);
  const auto x = torch::randn({3, 4, 4}, torch::kDouble);
  const auto e = torch::randn({3, 4, 4}, torch::kDouble);
  const auto z = torch::randn({3, 4, 4}, torch::kDouble);
  const int64_t t = 321;
  const auto out = ddim_reverse_step(x, t, e, s, z).contiguous();
  const double ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1);
  const auto xc = x.contiguous(), ec = e.contiguous(), zc = z.contiguous();
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double xi = xc.data_ptr<double>()[i];
    const double ei = ec.data_ptr<double>()[i];
    const double zi = zc.data_ptr<double>()[i];
    const double want =
        std::sqrt(abp) * (xi - std::sqrt(1 - ab) * ei) / std::sqrt(ab) + std::sqrt(1 - abp) * zi;
    EXPECT_NEAR(out.data_ptr<double>()[i], want, 1e-12);
  }
  EXPECT_THROW(ddim_reverse_step(x, 0, e, s, z), IndexError);
  EXPECT_THROW(ddim_reverse_step(x, 1000, e, s, z), IndexError);
}

}  // namespace
}  // namespace end4
