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

#ifndef END4_DETECTOR_HPP_
#define END4_DETECTOR_HPP_

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "end4/attention.hpp"

namespace end4 {

enum class FusionMode { kSpfm, kConcatenation, kAbsoluteDifference };

std::string to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& name);

// Residual CNN; each stage is conv, norm, SiLU, 2x2 max pool, then residual
// blocks. Stage k has channels >> (stages - 1 - k) channels, so the last
// stage emits `channels` maps at input_side / 2^stages.
struct BackboneConfig {
  int64_t stages = 5;
  int64_t channels = 256;
  int64_t input_side = 256;
  // Residual blocks per stage; empty means one block everywhere.
  std::vector<int64_t> blocks;

  void validate() const;
  int64_t output_side() const { return input_side >> stages; }
  int64_t stage_channels(int64_t stage) const;
  int64_t stage_blocks(int64_t stage) const;
};

struct SPFMConfig {
  std::array<int64_t, 2> sizes{2, 4};
  int64_t heads = 4;
  FusionMode fusion_mode = FusionMode::kSpfm;
};

struct DetectorConfig {
  BackboneConfig backbone;
  SPFMConfig spfm;

  // Throws ParameterError / ShapeError for inconsistent geometry.
  void validate() const;
  int64_t fused_length() const;
};

// Length of the fused vector: 2C for spfm and concatenation, C for
// absolute difference.
int64_t fused_length(int64_t channels, FusionMode mode);

class ConvResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ConvResidualBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(ConvResidualBlock);

class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const BackboneConfig& config);
  torch::Tensor forward(const torch::Tensor& images);
  const BackboneConfig& config() const { return config_; }

 private:
  BackboneConfig config_;
  torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(Backbone);

// Shape-checked backbone pass: [B, 3, S, S] -> [B, C, S/2^stages, ...].
torch::Tensor extract_features(Backbone& backbone, const torch::Tensor& images);

// One scale-aware layer: windowed self-attention over (2*size)^2 windows,
// two residual dilated 3x3 conv blocks (dilation = size), then an additive
// learned positional encoding.
class PyramidLayerImpl : public torch::nn::Module {
 public:
  PyramidLayerImpl(int64_t channels, int64_t size, int64_t heads,
                   int64_t height, int64_t width);
  torch::Tensor forward(const torch::Tensor& features);

  // Attention branch only (the state after the first residual add).
  torch::Tensor attend_windows(const torch::Tensor& features);

  // Degenerate configurations used by tests and ablations.
  void zero_attention();
  void zero_convs();

  int64_t size() const { return size_; }
  int64_t window() const { return 2 * size_; }

  torch::nn::LayerNorm norm{nullptr};
  MultiHeadAttention attn{nullptr};
  torch::nn::ModuleList conv_norms{nullptr}, convs{nullptr};
  torch::Tensor position;

 private:
  int64_t channels_;
  int64_t size_;
  int64_t height_;
  int64_t width_;
};
TORCH_MODULE(PyramidLayer);

torch::Tensor pyramid_layer(PyramidLayer& layer, const torch::Tensor& features,
                            int64_t size);

// Flattens both scales into one token axis: [B, 2*H*W, C], f1 first.
torch::Tensor stack_scales(const torch::Tensor& f1, const torch::Tensor& f2);
std::pair<torch::Tensor, torch::Tensor> unstack_scales(
    const torch::Tensor& tokens, int64_t height, int64_t width);

class SPFMImpl : public torch::nn::Module {
 public:
  SPFMImpl(int64_t channels, int64_t height, int64_t width,
           const SPFMConfig& config);

  // x_s = Self(Stack(L1(x), L2(L1(x)))).
  torch::Tensor encode(const torch::Tensor& features);
  // Fused vector [B, fused_length] for the configured mode.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& x_hat);

  const SPFMConfig& config() const { return config_; }

  PyramidLayer layer1{nullptr}, layer2{nullptr};
  SelfAttention self_attn{nullptr};
  CrossAttention cross_attn{nullptr};

 private:
  SPFMConfig config_;
};
TORCH_MODULE(SPFM);

torch::Tensor self_attend(SelfAttention& attention, const torch::Tensor& tokens);

// Pooled fusion of the two token sets (spfm mode) or of the raw feature maps
// (the two baseline modes, which take [B, C, H, W] inputs).
torch::Tensor cross_fuse(CrossAttention& attention, const torch::Tensor& x,
                         const torch::Tensor& x_hat, FusionMode mode);

class DetectorImpl : public torch::nn::Module {
 public:
  explicit DetectorImpl(const DetectorConfig& config);

  // x_SPFM (or the baseline fused vector) for original / reconstructed
  // images [B, 3, S, S].
  torch::Tensor fused_features(const torch::Tensor& x0,
                               const torch::Tensor& x0_hat);
  torch::Tensor logits(const torch::Tensor& fused);
  // Probability of "inpainted", strictly inside (0, 1).
  torch::Tensor forward(const torch::Tensor& x0, const torch::Tensor& x0_hat);

  const DetectorConfig& config() const { return config_; }

  Backbone backbone{nullptr};
  SPFM spfm{nullptr};
  torch::nn::Linear classifier{nullptr};

 private:
  DetectorConfig config_;
};
TORCH_MODULE(Detector);

Detector init_detector(const DetectorConfig& config, uint64_t seed);

// sigmoid(W * fused + b), one probability per row.
torch::Tensor classify(torch::nn::Linear& classifier, const torch::Tensor& fused);

}  // namespace end4

#endif  // END4_DETECTOR_HPP_
