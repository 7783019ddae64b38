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

#ifndef END4_AUGMENT_HPP_
#define END4_AUGMENT_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <random>

namespace end4 {

struct AugmentConfig {
  double flip_prob = 0.5;
  double jitter_prob = 0.8;
  double grayscale_prob = 0.2;
  // Jitter factors are drawn uniformly from [1 - x, 1 + x]; hue from
  // [-hue, hue] turns.
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.05;
  int64_t output_side = 256;
};

// All color ops take and return [3, H, W] tensors in [-1, 1].
torch::Tensor horizontal_flip(const torch::Tensor& chw);
torch::Tensor to_grayscale(const torch::Tensor& chw);
// Rotates chroma in YIQ space by `turns` of a full circle.
torch::Tensor shift_hue(const torch::Tensor& chw, double turns);
torch::Tensor adjust_brightness(const torch::Tensor& chw, double factor);
torch::Tensor adjust_contrast(const torch::Tensor& chw, double factor);
torch::Tensor adjust_saturation(const torch::Tensor& chw, double factor);

// Flip / jitter / grayscale with independent probabilities, then resize to
// cfg.output_side. Every random draw happens whether or not the transform
// fires, so the stream position does not depend on outcomes.
torch::Tensor augment(const torch::Tensor& chw, std::mt19937_64& rng,
                      const AugmentConfig& cfg);

}  // namespace end4

#endif  // END4_AUGMENT_HPP_
