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

#include "end4/detector.hpp"

#include <sstream>

#include "end4/denoiser.hpp"
#include "end4/errors.hpp"

namespace end4 {
namespace {

namespace F = torch::nn::functional;

constexpr double kProbabilityFloor = 1e-7;

torch::nn::Conv2d Conv3x3(int64_t in, int64_t out, int64_t stride = 1,
                          int64_t dilation = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3)
                               .stride(stride)
                               .padding(dilation)
                               .dilation(dilation));
}

void CheckFeatureMap(const torch::Tensor& f, const char* what) {
  if (f.dim() != 4) {
    throw ShapeError(std::string(what) + ": expected [B, C, H, W] features");
  }
}

}  // namespace

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kSpfm:
      return "spfm";
    case FusionMode::kConcatenation:
      return "concatenation";
    case FusionMode::kAbsoluteDifference:
      return "absolute_difference";
  }
  return "unknown";
}

FusionMode fusion_mode_from_string(const std::string& name) {
  if (name == "spfm") return FusionMode::kSpfm;
  if (name == "concatenation") return FusionMode::kConcatenation;
  if (name == "absolute_difference") return FusionMode::kAbsoluteDifference;
  throw ParameterError("unknown fusion mode '" + name + "'");
}

void BackboneConfig::validate() const {
  if (stages <= 0 || channels <= 0 || input_side <= 0) {
    throw ParameterError("backbone config values must be positive");
  }
  if (input_side % (int64_t{1} << stages) != 0) {
    throw ParameterError("backbone input_side not divisible by 2^stages");
  }
  if (channels % (int64_t{1} << (stages - 1)) != 0) {
    throw ParameterError("backbone channels must be divisible by 2^(stages-1)");
  }
  if (!blocks.empty() && static_cast<int64_t>(blocks.size()) != stages) {
    throw ParameterError("backbone blocks list must have one entry per stage");
  }
  for (auto b : blocks) {
    if (b < 0) throw ParameterError("negative block count");
  }
}

int64_t BackboneConfig::stage_channels(int64_t stage) const {
  return channels >> (stages - 1 - stage);
}

int64_t BackboneConfig::stage_blocks(int64_t stage) const {
  return blocks.empty() ? 1 : blocks[static_cast<size_t>(stage)];
}

int64_t fused_length(int64_t channels, FusionMode mode) {
  return mode == FusionMode::kAbsoluteDifference ? channels : 2 * channels;
}

void DetectorConfig::validate() const {
  backbone.validate();
  const int64_t side = backbone.output_side();
  for (auto size : spfm.sizes) {
    if (size <= 0 || side % (2 * size) != 0) {
      std::ostringstream os;
      os << "feature side " << side << " not divisible by window " << 2 * size;
      throw ShapeError(os.str());
    }
  }
  if (spfm.heads <= 0 || backbone.channels % spfm.heads != 0) {
    throw ParameterError("feature channels not divisible by attention heads");
  }
}

int64_t DetectorConfig::fused_length() const {
  return end4::fused_length(backbone.channels, spfm.fusion_mode);
}

ConvResidualBlockImpl::ConvResidualBlockImpl(int64_t channels) {
  norm1 = register_module(
      "norm1", torch::nn::GroupNorm(norm_groups(channels), channels));
  conv1 = register_module("conv1", Conv3x3(channels, channels));
  norm2 = register_module(
      "norm2", torch::nn::GroupNorm(norm_groups(channels), channels));
  conv2 = register_module("conv2", Conv3x3(channels, channels));
}

torch::Tensor ConvResidualBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv1(F::silu(norm1(x)));
  return x + conv2(F::silu(norm2(h)));
}

BackboneImpl::BackboneImpl(const BackboneConfig& config) : config_(config) {
  config_.validate();
  body = torch::nn::Sequential();
  int64_t prev = 3;
  for (int64_t s = 0; s < config_.stages; ++s) {
    const int64_t ch = config_.stage_channels(s);
    body->push_back(Conv3x3(prev, ch));
    body->push_back(torch::nn::GroupNorm(norm_groups(ch), ch));
    body->push_back(torch::nn::SiLU());
    body->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2)));
    for (int64_t b = 0; b < config_.stage_blocks(s); ++b) {
      body->push_back(ConvResidualBlock(ch));
    }
    prev = ch;
  }
  register_module("body", body);
}

torch::Tensor BackboneImpl::forward(const torch::Tensor& images) {
  return body->forward(images);
}

torch::Tensor extract_features(Backbone& backbone, const torch::Tensor& images) {
  const auto side = backbone->config().input_side;
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != side ||
      images.size(3) != side) {
    throw ShapeError("backbone expects [B, 3, " + std::to_string(side) + ", " +
                     std::to_string(side) + "] input");
  }
  return backbone->forward(images);
}

PyramidLayerImpl::PyramidLayerImpl(int64_t channels, int64_t size,
                                   int64_t heads, int64_t height, int64_t width)
    : channels_(channels), size_(size), height_(height), width_(width) {
  if (size <= 0 || height % (2 * size) != 0 || width % (2 * size) != 0) {
    throw ShapeError("pyramid window " + std::to_string(2 * size) +
                     " does not tile " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  norm = register_module(
      "norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({channels})));
  attn = register_module("attn", MultiHeadAttention(channels, heads));
  conv_norms = register_module("conv_norms", torch::nn::ModuleList());
  convs = register_module("convs", torch::nn::ModuleList());
  for (int i = 0; i < 2; ++i) {
    conv_norms->push_back(
        torch::nn::GroupNorm(norm_groups(channels), channels));
    convs->push_back(Conv3x3(channels, channels, 1, size));
  }
  position = register_parameter(
      "position", torch::randn({1, channels, height, width}) * 0.02);
}

torch::Tensor PyramidLayerImpl::attend_windows(const torch::Tensor& features) {
  CheckFeatureMap(features, "pyramid layer");
  const int64_t b = features.size(0);
  const int64_t c = features.size(1);
  const int64_t h = features.size(2);
  const int64_t w = features.size(3);
  const int64_t win = window();
  if (c != channels_ || h != height_ || w != width_) {
    throw ShapeError("pyramid layer built for a different feature shape");
  }
  // [B, C, H, W] -> [B * nH * nW, win * win, C]
  auto tokens = features.view({b, c, h / win, win, w / win, win})
                    .permute({0, 2, 4, 3, 5, 1})
                    .reshape({-1, win * win, c});
  auto normed = norm(tokens);
  tokens = tokens + attn(normed, normed);
  return tokens.view({b, h / win, w / win, win, win, c})
      .permute({0, 5, 1, 3, 2, 4})
      .reshape({b, c, h, w});
}

torch::Tensor PyramidLayerImpl::forward(const torch::Tensor& features) {
  auto h = attend_windows(features);
  for (size_t i = 0; i < convs->size(); ++i) {
    auto normed = conv_norms[i]->as<torch::nn::GroupNorm>()->forward(h);
    h = h + convs[i]->as<torch::nn::Conv2d>()->forward(F::silu(normed));
  }
  return h + position;
}

void PyramidLayerImpl::zero_attention() {
  torch::NoGradGuard guard;
  attn->out_proj->weight.zero_();
  attn->out_proj->bias.zero_();
}

void PyramidLayerImpl::zero_convs() {
  torch::NoGradGuard guard;
  for (auto& m : *convs) {
    auto conv = m->as<torch::nn::Conv2d>();
    conv->weight.zero_();
    conv->bias.zero_();
  }
}

torch::Tensor pyramid_layer(PyramidLayer& layer, const torch::Tensor& features,
                            int64_t size) {
  CheckFeatureMap(features, "pyramid layer");
  if (size != layer->size()) {
    throw ParameterError("pyramid layer size mismatch");
  }
  if (features.size(2) % (2 * size) != 0 || features.size(3) % (2 * size) != 0) {
    throw ShapeError("window " + std::to_string(2 * size) +
                     " does not tile the feature map");
  }
  return layer->forward(features);
}

torch::Tensor stack_scales(const torch::Tensor& f1, const torch::Tensor& f2) {
  CheckFeatureMap(f1, "stack");
  if (f1.sizes() != f2.sizes()) {
    throw ShapeError("stack expects equally shaped feature maps");
  }
  return torch::cat({to_tokens(f1), to_tokens(f2)}, 1);
}

std::pair<torch::Tensor, torch::Tensor> unstack_scales(
    const torch::Tensor& tokens, int64_t height, int64_t width) {
  if (tokens.dim() != 3 || tokens.size(1) != 2 * height * width) {
    throw ShapeError("token count is not 2*H*W");
  }
  auto parts = tokens.split(height * width, 1);
  return {from_tokens(parts[0], height, width),
          from_tokens(parts[1], height, width)};
}

SPFMImpl::SPFMImpl(int64_t channels, int64_t height, int64_t width,
                   const SPFMConfig& config)
    : config_(config) {
  layer1 = register_module(
      "layer1", PyramidLayer(channels, config.sizes[0], config.heads, height, width));
  layer2 = register_module(
      "layer2", PyramidLayer(channels, config.sizes[1], config.heads, height, width));
  self_attn = register_module("self_attn", SelfAttention(channels, config.heads));
  cross_attn =
      register_module("cross_attn", CrossAttention(channels, config.heads));
}

torch::Tensor SPFMImpl::encode(const torch::Tensor& features) {
  auto f1 = layer1(features);
  auto f2 = layer2(f1);
  return self_attn(stack_scales(f1, f2));
}

torch::Tensor SPFMImpl::forward(const torch::Tensor& x,
                                const torch::Tensor& x_hat) {
  if (config_.fusion_mode != FusionMode::kSpfm) {
    return cross_fuse(cross_attn, x, x_hat, config_.fusion_mode);
  }
  // Both branches share one encoder pass.
  auto both = encode(torch::cat({x, x_hat}, 0));
  auto parts = both.chunk(2, 0);
  return cross_fuse(cross_attn, parts[0], parts[1], FusionMode::kSpfm);
}

torch::Tensor self_attend(SelfAttention& attention, const torch::Tensor& tokens) {
  if (tokens.dim() != 3) throw ShapeError("self attention expects [B, N, C]");
  if (tokens.size(2) % attention->attn->heads() != 0) {
    throw ParameterError("channel dim not divisible by heads");
  }
  return attention->forward(tokens);
}

torch::Tensor cross_fuse(CrossAttention& attention, const torch::Tensor& x,
                         const torch::Tensor& x_hat, FusionMode mode) {
  if (x.sizes() != x_hat.sizes()) {
    throw ShapeError("fusion expects equally shaped inputs");
  }
  switch (mode) {
    case FusionMode::kSpfm: {
      auto forward = attention->forward(x, x_hat).mean(1);
      auto backward = attention->forward(x_hat, x).mean(1);
      return torch::cat({forward, backward}, 1);
    }
    case FusionMode::kConcatenation:
      CheckFeatureMap(x, "concatenation fusion");
      return torch::cat({x.mean({2, 3}), x_hat.mean({2, 3})}, 1);
    case FusionMode::kAbsoluteDifference:
      CheckFeatureMap(x, "absolute difference fusion");
      return (x - x_hat).abs().mean({2, 3});
  }
  throw ParameterError("unknown fusion mode");
}

DetectorImpl::DetectorImpl(const DetectorConfig& config) : config_(config) {
  config_.validate();
  const int64_t side = config_.backbone.output_side();
  backbone = register_module("backbone", Backbone(config_.backbone));
  spfm = register_module(
      "spfm", SPFM(config_.backbone.channels, side, side, config_.spfm));
  classifier = register_module(
      "classifier", torch::nn::Linear(config_.fused_length(), 1));
}

torch::Tensor DetectorImpl::fused_features(const torch::Tensor& x0,
                                           const torch::Tensor& x0_hat) {
  if (x0.sizes() != x0_hat.sizes()) {
    throw ShapeError("original and reconstruction differ in shape");
  }
  auto feats = extract_features(backbone, torch::cat({x0, x0_hat}, 0));
  auto parts = feats.chunk(2, 0);
  return spfm->forward(parts[0], parts[1]);
}

torch::Tensor DetectorImpl::logits(const torch::Tensor& fused) {
  if (fused.dim() != 2 || fused.size(1) != config_.fused_length()) {
    throw ShapeError("classifier expects fused length " +
                     std::to_string(config_.fused_length()));
  }
  return classifier(fused).squeeze(1);
}

torch::Tensor DetectorImpl::forward(const torch::Tensor& x0,
                                    const torch::Tensor& x0_hat) {
  return classify(classifier, fused_features(x0, x0_hat));
}

Detector init_detector(const DetectorConfig& config, uint64_t seed) {
  config.validate();
  torch::manual_seed(seed);
  return Detector(config);
}

torch::Tensor classify(torch::nn::Linear& classifier, const torch::Tensor& fused) {
  if (fused.dim() != 2 || fused.size(1) != classifier->options.in_features()) {
    throw ShapeError("classifier input length mismatch");
  }
  return torch::sigmoid(classifier(fused).squeeze(1))
      .clamp(kProbabilityFloor, 1.0 - kProbabilityFloor);
}

}  // namespace end4
