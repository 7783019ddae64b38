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

#include "end4/denoiser.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "end4/errors.hpp"

namespace end4 {
namespace {

namespace F = torch::nn::functional;

torch::nn::Conv2d Conv3x3(int64_t in, int64_t out, int64_t stride = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

int64_t AttentionHeads(int64_t channels) { return channels % 4 == 0 ? 4 : 1; }

}  // namespace

void DenoiserConfig::validate() const {
  if (base_channels <= 0 || depth <= 0 || time_embed_dim <= 0 ||
      input_side <= 0) {
    throw ParameterError("denoiser config values must be positive");
  }
  if (time_embed_dim % 2 != 0) {
    throw ParameterError("time_embed_dim must be even");
  }
  if (input_side % (int64_t{1} << depth) != 0) {
    throw ParameterError("input_side " + std::to_string(input_side) +
                         " not divisible by 2^depth");
  }
}

torch::Tensor embed_time(const torch::Tensor& t, int64_t dim,
                         torch::Dtype dtype) {
  if (dim <= 0 || dim % 2 != 0) {
    throw ParameterError("time embedding dim must be positive and even");
  }
  const int64_t half = dim / 2;
  auto freqs = torch::exp(torch::arange(half, torch::kDouble) *
                          (-std::log(10000.0) / static_cast<double>(half)));
  auto args = t.to(torch::kDouble).reshape({-1, 1}) * freqs.reshape({1, -1});
  return torch::cat({torch::sin(args), torch::cos(args)}, 1).to(dtype);
}

torch::Tensor embed_time(int64_t t, int64_t dim) {
  if (t < 0) throw ParameterError("time step must be non-negative");
  return embed_time(torch::tensor({t}, torch::kLong), dim, torch::kDouble)[0];
}

int64_t norm_groups(int64_t channels) { return std::gcd(channels, int64_t{8}); }

TimeResidualBlockImpl::TimeResidualBlockImpl(int64_t in_channels,
                                             int64_t out_channels,
                                             int64_t time_dim) {
  norm1 = register_module(
      "norm1", torch::nn::GroupNorm(norm_groups(in_channels), in_channels));
  conv1 = register_module("conv1", Conv3x3(in_channels, out_channels));
  time_proj = register_module("time_proj",
                              torch::nn::Linear(time_dim, out_channels));
  norm2 = register_module(
      "norm2", torch::nn::GroupNorm(norm_groups(out_channels), out_channels));
  conv2 = register_module("conv2", Conv3x3(out_channels, out_channels));
  if (in_channels != out_channels) {
    skip = register_module(
        "skip", torch::nn::Conv2d(
                    torch::nn::Conv2dOptions(in_channels, out_channels, 1)));
  }
}

torch::Tensor TimeResidualBlockImpl::forward(const torch::Tensor& x,
                                             const torch::Tensor& time_emb) {
  auto h = conv1(F::silu(norm1(x)));
  h = h + time_proj(time_emb).unsqueeze(-1).unsqueeze(-1);
  h = conv2(F::silu(norm2(h)));
  return (skip ? skip(x) : x) + h;
}

UNetDenoiserImpl::UNetDenoiserImpl(const DenoiserConfig& config)
    : config_(config) {
  config_.validate();
  const int64_t base = config_.base_channels;
  const int64_t emb = config_.time_embed_dim;

  time_mlp = register_module(
      "time_mlp",
      torch::nn::Sequential(torch::nn::Linear(emb, emb), torch::nn::SiLU(),
                            torch::nn::Linear(emb, emb)));
  in_conv = register_module("in_conv", Conv3x3(3, base));

  down_blocks = register_module("down_blocks", torch::nn::ModuleList());
  downsamples = register_module("downsamples", torch::nn::ModuleList());
  int64_t prev = base;
  for (int64_t i = 0; i < config_.depth; ++i) {
    const int64_t ch = config_.stage_channels(i);
    down_blocks->push_back(TimeResidualBlock(prev, ch, emb));
    downsamples->push_back(Conv3x3(ch, ch, 2));
    prev = ch;
  }

  mid1 = register_module("mid1", TimeResidualBlock(prev, prev, emb));
  mid_attn = register_module("mid_attn", SelfAttention(prev, AttentionHeads(prev)));
  mid2 = register_module("mid2", TimeResidualBlock(prev, prev, emb));

  upsample_convs = register_module("upsample_convs", torch::nn::ModuleList());
  up_blocks = register_module("up_blocks", torch::nn::ModuleList());
  for (int64_t i = config_.depth - 1; i >= 0; --i) {
    const int64_t ch = config_.stage_channels(i);
    upsample_convs->push_back(Conv3x3(prev, prev));
    up_blocks->push_back(TimeResidualBlock(prev + ch, ch, emb));
    prev = ch;
  }

  out_norm = register_module("out_norm",
                             torch::nn::GroupNorm(norm_groups(base), base));
  out_conv = register_module("out_conv", Conv3x3(base, 3));
}

torch::Tensor UNetDenoiserImpl::forward(const torch::Tensor& x_t,
                                        const torch::Tensor& t) {
  auto emb = time_mlp->forward(
      embed_time(t, config_.time_embed_dim, x_t.scalar_type()));

  auto h = in_conv(x_t);
  std::vector<torch::Tensor> skips;
  for (int64_t i = 0; i < config_.depth; ++i) {
    h = down_blocks[i]->as<TimeResidualBlock>()->forward(h, emb);
    skips.push_back(h);
    h = downsamples[i]->as<torch::nn::Conv2d>()->forward(h);
  }

  h = mid1(h, emb);
  const int64_t side = h.size(2);
  h = from_tokens(mid_attn(to_tokens(h)), side, h.size(3));
  h = mid2(h, emb);

  for (int64_t j = 0; j < config_.depth; ++j) {
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .scale_factor(std::vector<double>{2.0, 2.0})
                              .mode(torch::kNearest));
    h = upsample_convs[j]->as<torch::nn::Conv2d>()->forward(h);
    h = torch::cat({h, skips[static_cast<size_t>(config_.depth - 1 - j)]}, 1);
    h = up_blocks[j]->as<TimeResidualBlock>()->forward(h, emb);
  }
  return out_conv(F::silu(out_norm(h)));
}

UNetDenoiser init_denoiser(const DenoiserConfig& config, uint64_t seed) {
  config.validate();
  torch::manual_seed(seed);
  return UNetDenoiser(config);
}

torch::Tensor predict_noise(UNetDenoiser& denoiser, const torch::Tensor& x_t,
                            const torch::Tensor& t) {
  const auto side = denoiser->config().input_side;
  if (x_t.dim() != 4 || x_t.size(1) != 3 || x_t.size(2) != side ||
      x_t.size(3) != side) {
    throw ShapeError("denoiser expects [B, 3, " + std::to_string(side) + ", " +
                     std::to_string(side) + "] input");
  }
  if (t.dim() != 1 || t.size(0) != x_t.size(0)) {
    throw ShapeError("denoiser expects one time step per sample");
  }
  return denoiser->forward(x_t, t);
}

torch::Tensor predict_noise(UNetDenoiser& denoiser, const torch::Tensor& x_t,
                            int64_t t) {
  auto steps = torch::full({x_t.dim() == 4 ? x_t.size(0) : 1}, t, torch::kLong);
  return predict_noise(denoiser, x_t, steps);
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace end4
