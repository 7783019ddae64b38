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

#include "end4/losses.hpp"

#include <cmath>

#include "end4/errors.hpp"

namespace end4 {

std::string to_string(NoiseTarget target) {
  switch (target) {
    case NoiseTarget::kNone:
      return "none";
    case NoiseTarget::kAll:
      return "all";
    case NoiseTarget::kNatureOnly:
      return "nature_only";
    case NoiseTarget::kInpaintingOnly:
      return "inpainting_only";
  }
  return "unknown";
}

std::string to_string(NoiseNormalization normalization) {
  return normalization == NoiseNormalization::kLiteralHalfSquaredL2
             ? "literal_half_sq_l2"
             : "per_element_mean";
}

NoiseTarget noise_target_from_string(const std::string& name) {
  if (name == "none") return NoiseTarget::kNone;
  if (name == "all") return NoiseTarget::kAll;
  if (name == "nature_only") return NoiseTarget::kNatureOnly;
  if (name == "inpainting_only") return NoiseTarget::kInpaintingOnly;
  throw ParameterError("unknown noise target '" + name + "'");
}

NoiseNormalization normalization_from_string(const std::string& name) {
  if (name == "literal_half_sq_l2") return NoiseNormalization::kLiteralHalfSquaredL2;
  if (name == "per_element_mean") return NoiseNormalization::kPerElementMean;
  throw ParameterError("unknown noise normalization '" + name + "'");
}

torch::Tensor noise_loss_mask(const torch::Tensor& labels, NoiseTarget target) {
  auto y = labels.to(torch::kDouble);
  switch (target) {
    case NoiseTarget::kNone:
      return torch::zeros_like(y);
    case NoiseTarget::kAll:
      return torch::ones_like(y);
    case NoiseTarget::kNatureOnly:
      return 1.0 - y;
    case NoiseTarget::kInpaintingOnly:
      return y;
  }
  throw ParameterError("unknown noise target");
}

torch::Tensor noise_loss(const torch::Tensor& eps, const torch::Tensor& eps_hat,
                         const torch::Tensor& labels, const LossConfig& cfg) {
  if (eps.sizes() != eps_hat.sizes()) {
    throw ShapeError("noise loss: eps and eps_hat differ in shape");
  }
  const bool single = labels.dim() == 0;
  auto residual = single ? (eps - eps_hat).unsqueeze(0) : eps - eps_hat;
  auto y = single ? labels.reshape({1}) : labels;
  if (y.dim() != 1 || y.size(0) != residual.size(0)) {
    throw ShapeError("noise loss: one label per sample required");
  }
  auto sq = residual.pow(2).flatten(1);
  auto per_sample = cfg.normalization == NoiseNormalization::kPerElementMean
                        ? sq.mean(1) / 2.0
                        : sq.sum(1) / 2.0;
  auto mask = noise_loss_mask(y, cfg.noise_target).to(per_sample.scalar_type());
  return (mask * per_sample).mean();
}

torch::Tensor ce_loss(const torch::Tensor& labels, const torch::Tensor& probs) {
  if (labels.sizes() != probs.sizes()) {
    throw ShapeError("cross entropy: labels and probabilities differ in shape");
  }
  auto p = probs.clamp(kCeProbabilityClamp, 1.0 - kCeProbabilityClamp);
  auto y = labels.to(p.scalar_type());
  return -(y * torch::log(p) + (1.0 - y) * torch::log(1.0 - p)).mean();
}

torch::Tensor total_loss(const torch::Tensor& l_noise, const torch::Tensor& l_ce) {
  if (!torch::isfinite(l_noise).all().item<bool>() ||
      !torch::isfinite(l_ce).all().item<bool>()) {
    throw NumericError("non-finite loss term");
  }
  return l_noise + l_ce;
}

double total_loss(double l_noise, double l_ce) {
  if (!std::isfinite(l_noise) || !std::isfinite(l_ce)) {
    throw NumericError("non-finite loss term");
  }
  return l_noise + l_ce;
}

}  // namespace end4
