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

#ifndef END4_DENOISER_HPP_
#define END4_DENOISER_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "end4/attention.hpp"

namespace end4 {

struct DenoiserConfig {
  int64_t base_channels = 32;
  int64_t depth = 3;
  int64_t time_embed_dim = 128;
  int64_t input_side = 64;

  // Throws ParameterError.
  void validate() const;
  int64_t stage_channels(int64_t stage) const { return base_channels << stage; }
};

// Sinusoidal time embedding: first dim/2 entries are sin(t * w_i), the rest
// cos(t * w_i), with w_i = 10000^(-i / (dim/2)).
torch::Tensor embed_time(int64_t t, int64_t dim);
// Batched: t is [B] (any numeric dtype); result [B, dim] in `dtype`.
torch::Tensor embed_time(const torch::Tensor& t, int64_t dim,
                         torch::Dtype dtype = torch::kFloat);

// Group count used by every GroupNorm in the project.
int64_t norm_groups(int64_t channels);

// GN -> SiLU -> conv3x3 (+ time projection) -> GN -> SiLU -> conv3x3, plus a
// 1x1 skip when the channel count changes.
class TimeResidualBlockImpl : public torch::nn::Module {
 public:
  TimeResidualBlockImpl(int64_t in_channels, int64_t out_channels,
                        int64_t time_dim);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& time_emb);

 private:
  torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, skip{nullptr};
  torch::nn::Linear time_proj{nullptr};
};
TORCH_MODULE(TimeResidualBlock);

// Noise predictor eps_theta(x_t, t): encoder/decoder with skip connections
// and one self-attention block at the coarsest scale.
class UNetDenoiserImpl : public torch::nn::Module {
 public:
  explicit UNetDenoiserImpl(const DenoiserConfig& config);

  // x_t: [B, 3, S, S]; t: [B] schedule indices.
  torch::Tensor forward(const torch::Tensor& x_t, const torch::Tensor& t);

  const DenoiserConfig& config() const { return config_; }

 private:
  DenoiserConfig config_;
  torch::nn::Sequential time_mlp{nullptr};
  torch::nn::Conv2d in_conv{nullptr};
  torch::nn::ModuleList down_blocks{nullptr}, downsamples{nullptr};
  TimeResidualBlock mid1{nullptr}, mid2{nullptr};
  SelfAttention mid_attn{nullptr};
  torch::nn::ModuleList upsample_convs{nullptr}, up_blocks{nullptr};
  torch::nn::GroupNorm out_norm{nullptr};
  torch::nn::Conv2d out_conv{nullptr};
};
TORCH_MODULE(UNetDenoiser);

// Weights are a pure function of (config, seed).
UNetDenoiser init_denoiser(const DenoiserConfig& config, uint64_t seed);

// Shape-checked forward pass. `t` is a [B] tensor of schedule indices.
torch::Tensor predict_noise(UNetDenoiser& denoiser, const torch::Tensor& x_t,
                            const torch::Tensor& t);
torch::Tensor predict_noise(UNetDenoiser& denoiser, const torch::Tensor& x_t,
                            int64_t t);

int64_t parameter_count(const torch::nn::Module& module);

}  // namespace end4

#endif  // END4_DENOISER_HPP_
