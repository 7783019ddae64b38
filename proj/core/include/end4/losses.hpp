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

#ifndef END4_LOSSES_HPP_
#define END4_LOSSES_HPP_

#include <torch/torch.h>

#include <string>

namespace end4 {

// Which samples receive the noise-prediction loss.
enum class NoiseTarget { kNone, kAll, kNatureOnly, kInpaintingOnly };

enum class NoiseNormalization {
  kLiteralHalfSquaredL2,  // ||eps - eps_hat||^2 / 2 per sample
  kPerElementMean,        // mean((eps - eps_hat)^2) / 2 per sample
};

struct LossConfig {
  NoiseTarget noise_target = NoiseTarget::kInpaintingOnly;
  NoiseNormalization normalization = NoiseNormalization::kPerElementMean;
};

std::string to_string(NoiseTarget target);
std::string to_string(NoiseNormalization normalization);
NoiseTarget noise_target_from_string(const std::string& name);
NoiseNormalization normalization_from_string(const std::string& name);

constexpr double kCeProbabilityClamp = 1e-7;

// Per-sample label multiplier m(y) for the configured target.
torch::Tensor noise_loss_mask(const torch::Tensor& labels, NoiseTarget target);

// Batch mean of m(y) * D(eps, eps_hat). `eps` and `eps_hat` are [B, ...],
// labels [B] with values in {0, 1}. A single unbatched sample is accepted
// when labels is a scalar tensor.
torch::Tensor noise_loss(const torch::Tensor& eps, const torch::Tensor& eps_hat,
                         const torch::Tensor& labels, const LossConfig& cfg);

// Batch mean binary cross-entropy with probabilities clamped to
// [1e-7, 1 - 1e-7].
torch::Tensor ce_loss(const torch::Tensor& labels, const torch::Tensor& probs);

// Unweighted sum. Throws NumericError for non-finite inputs.
torch::Tensor total_loss(const torch::Tensor& l_noise, const torch::Tensor& l_ce);
double total_loss(double l_noise, double l_ce);

}  // namespace end4

#endif  // END4_LOSSES_HPP_
