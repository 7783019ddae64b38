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

#include "end4/augment.hpp"

#include <cmath>
#include <numbers>

#include "end4/errors.hpp"
#include "end4/image.hpp"

namespace end4 {
namespace {

void CheckImage(const torch::Tensor& chw) {
  if (chw.dim() != 3 || chw.size(0) != 3) {
    throw ShapeError("expected a [3, H, W] image tensor");
  }
}

torch::Tensor Luma(const torch::Tensor& chw) {
  return chw[0] * 0.299 + chw[1] * 0.587 + chw[2] * 0.114;
}

// Works in [0, 1] space so multiplicative factors behave as usual.
torch::Tensor ToUnit(const torch::Tensor& chw) { return (chw + 1.0) * 0.5; }
torch::Tensor FromUnit(const torch::Tensor& unit) {
  return unit.clamp(0.0, 1.0) * 2.0 - 1.0;
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

torch::Tensor horizontal_flip(const torch::Tensor& chw) {
  CheckImage(chw);
  return chw.flip({2});
}

torch::Tensor to_grayscale(const torch::Tensor& chw) {
  CheckImage(chw);
  return Luma(chw).unsqueeze(0).expand({3, chw.size(1), chw.size(2)}).contiguous();
}

torch::Tensor shift_hue(const torch::Tensor& chw, double turns) {
  CheckImage(chw);
  const double theta = 2.0 * std::numbers::pi * turns;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // RGB -> YIQ, rotate (I, Q), YIQ -> RGB.
  const auto to_yiq = torch::tensor({{0.299, 0.587, 0.114},
                                     {0.596, -0.274, -0.322},
                                     {0.211, -0.523, 0.312}},
                                    torch::kDouble);
  const auto rot = torch::tensor({{1.0, 0.0, 0.0}, {0.0, c, -s}, {0.0, s, c}},
                                 torch::kDouble);
  const auto to_rgb = torch::linalg_inv(to_yiq);
  const auto m = torch::matmul(to_rgb, torch::matmul(rot, to_yiq))
                     .to(chw.scalar_type());
  auto unit = ToUnit(chw);
  auto mixed = torch::matmul(m, unit.reshape({3, -1})).reshape(chw.sizes());
  return FromUnit(mixed);
}

torch::Tensor adjust_brightness(const torch::Tensor& chw, double factor) {
  CheckImage(chw);
  return FromUnit(ToUnit(chw) * factor);
}

torch::Tensor adjust_contrast(const torch::Tensor& chw, double factor) {
  CheckImage(chw);
  auto unit = ToUnit(chw);
  auto mean = Luma(unit).mean();
  return FromUnit(mean + (unit - mean) * factor);
}

torch::Tensor adjust_saturation(const torch::Tensor& chw, double factor) {
  CheckImage(chw);
  auto unit = ToUnit(chw);
  auto gray = Luma(unit).unsqueeze(0);
  return FromUnit(gray + (unit - gray) * factor);
}

torch::Tensor augment(const torch::Tensor& chw, std::mt19937_64& rng,
                      const AugmentConfig& cfg) {
  CheckImage(chw);
  const double u_flip = Uniform(rng, 0.0, 1.0);
  const double u_jitter = Uniform(rng, 0.0, 1.0);
  const double u_gray = Uniform(rng, 0.0, 1.0);
  const double brightness = Uniform(rng, 1.0 - cfg.brightness, 1.0 + cfg.brightness);
  const double contrast = Uniform(rng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
  const double saturation = Uniform(rng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
  const double hue = Uniform(rng, -cfg.hue, cfg.hue);

  auto out = chw;
  if (u_flip < cfg.flip_prob) out = horizontal_flip(out);
  if (u_jitter < cfg.jitter_prob) {
    out = adjust_brightness(out, brightness);
    out = adjust_contrast(out, contrast);
    out = adjust_saturation(out, saturation);
    out = shift_hue(out, hue);
  }
  if (u_gray < cfg.grayscale_prob) out = to_grayscale(out);
  return resize_tensor(out, cfg.output_side);
}

}  // namespace end4
