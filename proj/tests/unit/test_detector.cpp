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

#include <cmath>

#include "end4/attention.hpp"
#include "end4/detector.hpp"
#include "end4/errors.hpp"
#include "support/gradcheck.hpp"

namespace end4 {
namespace {

DetectorConfig Tiny(FusionMode mode = FusionMode::kSpfm) {
  DetectorConfig c;
  c.backbone.stages = 2;
  c.backbone.channels = 8;
  c.backbone.input_side = 32;
  c.spfm.heads = 2;
  c.spfm.fusion_mode = mode;
  return c;
}

TEST(Backbone, DefaultStrideArithmetic) {
  torch::manual_seed(0);
  BackboneConfig c;
  Backbone net(c);
  torch::NoGradGuard guard;
  const auto x = torch::randn({1, 3, 256, 256});
  const auto f = extract_features(net, x);
  EXPECT_EQ(f.sizes(), (std::vector<int64_t>{1, 256, 8, 8}));
  EXPECT_TRUE(torch::equal(f, extract_features(net, x)));
  EXPECT_THROW(extract_features(net, torch::zeros({1, 3, 128, 128})), ShapeError);
}

TEST(Backbone, InputGradientMatchesFiniteDifferences) {
  torch::manual_seed(1);
  BackboneConfig c;
  c.stages = 2;
  c.channels = 8;
  c.input_side = 8;
  Backbone net(c);
  net->to(torch::kDouble);
  auto x = torch::randn({1, 3, 8, 8}, torch::kDouble).requires_grad_(true);
  const auto r = testing::check_gradients({{"input", x}},
                                          [&] { return extract_features(net, x).pow(2).mean(); },
                                          64, 2);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst;
}

TEST(PyramidLayer, ShapePreservation) {
  torch::manual_seed(2);
  PyramidLayer small(16, 2, 4, 8, 8);
  PyramidLayer large(16, 4, 4, 8, 8);
  torch::NoGradGuard guard;
  const auto x = torch::randn({2, 16, 8, 8});
  EXPECT_EQ(pyramid_layer(small, x, 2).sizes(), x.sizes());
  EXPECT_EQ(pyramid_layer(large, x, 4).sizes(), x.sizes());
  EXPECT_THROW(PyramidLayer(16, 3, 4, 8, 8), ShapeError);
  EXPECT_THROW(pyramid_layer(small, x, 4), ParameterError);
}

TEST(PyramidLayer, DegenerateWeightsAddPosition) {
  torch::manual_seed(3);
  PyramidLayer layer(8, 2, 2, 8, 8);
  layer->zero_attention();
  layer->zero_convs();
  torch::NoGradGuard guard;
  const auto x = torch::randn({2, 8, 8, 8});
  const auto y = layer->forward(x);
  EXPECT_TRUE(torch::equal(y, x + layer->position));
}

TEST(PyramidLayer, WindowAttentionIsLocal) {
  torch::manual_seed(4);
  PyramidLayer layer(8, 2, 2, 8, 8);
  layer->zero_convs();
  torch::NoGradGuard guard;
  const auto x = torch::randn({1, 8, 8, 8});
  auto x2 = x.clone();
  // Perturb the window covering rows 4..7, cols 0..3.
  x2.slice(2, 4, 8).slice(3, 0, 4) += torch::randn({1, 8, 4, 4});
  const auto a = layer->forward(x);
  const auto b = layer->forward(x2);
  auto inside = torch::zeros({8, 8}, torch::kBool);
  inside.slice(0, 4, 8).slice(1, 0, 4).fill_(true);
  const auto outside = inside.logical_not();
  EXPECT_TRUE(torch::equal(a.index({0, torch::indexing::Slice(), outside}),
                           b.index({0, torch::indexing::Slice(), outside})));
  EXPECT_FALSE(torch::equal(a.index({0, torch::indexing::Slice(), inside}),
                            b.index({0, torch::indexing::Slice(), inside})));
}

TEST(PyramidLayer, GradientsMatchFiniteDifferences) {
  torch::manual_seed(5);
  PyramidLayer layer(8, 2, 2, 4, 4);
  layer->to(torch::kDouble);
  const auto x = torch::randn({2, 8, 4, 4}, torch::kDouble);
  const auto r = testing::check_gradients(testing::named_params(*layer),
                                          [&] { return layer->forward(x).pow(2).mean(); }, 64, 6);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst;
}

TEST(Stack, TokenLayoutAndRoundTrip) {
  const auto a = torch::randn({1, 256, 8, 8});
  const auto b = torch::randn({1, 256, 8, 8});
  const auto s = stack_scales(a, b);
  EXPECT_EQ(s.sizes(), (std::vector<int64_t>{1, 128, 256}));
  const auto [ra, rb] = unstack_scales(s, 8, 8);
  EXPECT_TRUE(torch::equal(ra, a));
  EXPECT_TRUE(torch::equal(rb, b));
  const auto swapped = stack_scales(b, a);
  EXPECT_TRUE(torch::equal(swapped.slice(1, 0, 64), s.slice(1, 64, 128)));
  EXPECT_TRUE(torch::equal(swapped.slice(1, 64, 128), s.slice(1, 0, 64)));
  EXPECT_THROW(stack_scales(a, torch::randn({1, 256, 4, 4})), ShapeError);
}

TEST(SelfAttention, ShapeRowsAndDegenerateIdentity) {
  torch::manual_seed(6);
  SelfAttention attn(16, 4);
  torch::NoGradGuard guard;
  const auto tokens = torch::randn({2, 10, 16});
  EXPECT_EQ(self_attend(attn, tokens).sizes(), tokens.sizes());
  const auto w = attn->attention_weights(tokens);
  EXPECT_LT((w.sum(-1) - 1).abs().max().item<float>(), 1e-6);
  attn->attn->v_proj->weight.zero_();
  attn->attn->v_proj->bias.zero_();
  attn->attn->out_proj->weight.zero_();
  attn->attn->out_proj->bias.zero_();
  EXPECT_TRUE(torch::equal(self_attend(attn, tokens), tokens));
  EXPECT_THROW(MultiHeadAttention(10, 4), ParameterError);
}

TEST(SelfAttention, GradientsMatchFiniteDifferences) {
  torch::manual_seed(7);
  SelfAttention attn(8, 2);
  attn->to(torch::kDouble);
  const auto tokens = torch::randn({2, 6, 8}, torch::kDouble);
  const auto r = testing::check_gradients(testing::named_params(*attn),
                                          [&] { return attn->forward(tokens).pow(2).mean(); }, 64, 8);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst;
}

TEST(CrossFuse, ModesAndLengths) {
  torch::manual_seed(8);
  CrossAttention mca(256, 4);
  torch::NoGradGuard guard;
  const auto a = torch::randn({2, 128, 256});
  const auto b = torch::randn({2, 128, 256});
  EXPECT_EQ(cross_fuse(mca, a, b, FusionMode::kSpfm).size(1), 512);
  EXPECT_GT((mca->forward(a, b) - mca->forward(b, a)).abs().max().item<float>(), 1e-6);
  const auto fa = torch::randn({2, 32, 4, 4});
  const auto fb = torch::randn({2, 32, 4, 4});
  EXPECT_TRUE(torch::equal(cross_fuse(mca, fa, fa, FusionMode::kAbsoluteDifference),
                           torch::zeros({2, 32})));
  const auto manual = torch::cat({fa.mean({2, 3}), fb.mean({2, 3})}, 1);
  EXPECT_TRUE(torch::equal(cross_fuse(mca, fa, fb, FusionMode::kConcatenation), manual));
  EXPECT_THROW(cross_fuse(mca, a, b.slice(1, 0, 10), FusionMode::kSpfm), ShapeError);
  EXPECT_EQ(fused_length(256, FusionMode::kSpfm), 512);
  EXPECT_EQ(fused_length(256, FusionMode::kConcatenation), 512);
  EXPECT_EQ(fused_length(256, FusionMode::kAbsoluteDifference), 256);
}

TEST(CrossAttention, GradientsMatchFiniteDifferences) {
  torch::manual_seed(9);
  CrossAttention mca(8, 2);
  mca->to(torch::kDouble);
  const auto a = torch::randn({2, 6, 8}, torch::kDouble);
  const auto b = torch::randn({2, 6, 8}, torch::kDouble);
  const auto r = testing::check_gradients(
      testing::named_params(*mca),
      [&] { return cross_fuse(mca, a, b, FusionMode::kSpfm).pow(2).mean(); }, 64, 10);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst;
}

TEST(Classifier, SigmoidContract) {
  torch::nn::Linear fc(4, 1);
  torch::NoGradGuard guard;
  fc->weight.zero_();
  fc->bias.zero_();
  EXPECT_FLOAT_EQ(classify(fc, torch::randn({3, 4}))[0].item<float>(), 0.5f);
  fc->bias.fill_(10.0);
  EXPECT_NEAR(classify(fc, torch::zeros({1, 4}))[0].item<float>(),
              0.9999546, 1e-6);
  fc->weight.normal_();
  const auto p = classify(fc, torch::randn({100, 4}) * 100);
  EXPECT_GT(p.min().item<float>(), 0.0f);
  EXPECT_LT(p.max().item<float>(), 1.0f);
  EXPECT_THROW(classify(fc, torch::zeros({1, 5})), ShapeError);
}

TEST(Classifier, GradientsMatchFiniteDifferences) {
  torch::manual_seed(10);
  torch::nn::Linear fc(16, 1);
  fc->to(torch::kDouble);
  const auto x = torch::randn({4, 16}, torch::kDouble);
  const auto r = testing::check_gradients(testing::named_params(*fc),
                                          [&] { return classify(fc, x).log().sum(); }, 64, 11);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst;
}

TEST(Detector, EndToEndShapeAllModes) {
  for (auto mode : {FusionMode::kSpfm, FusionMode::kConcatenation,
                    FusionMode::kAbsoluteDifference}) {
    auto det = init_detector(Tiny(mode), 12);
    torch::NoGradGuard guard;
    for (int k = 0; k < 5; ++k) {
      const auto x = torch::rand({3, 3, 32, 32}) * 2 - 1;
      const auto xh = torch::rand({3, 3, 32, 32}) * 2 - 1;
      const auto p = det->forward(x, xh);
      ASSERT_EQ(p.sizes(), (std::vector<int64_t>{3}));
      EXPECT_GT(p.min().item<float>(), 0.0f);
      EXPECT_LT(p.max().item<float>(), 1.0f);
      EXPECT_EQ(det->fused_features(x, xh).size(1), Tiny(mode).fused_length());
    }
  }
}

TEST(Detector, BatchedBranchesMatchSeparateCalls) {
  auto det = init_detector(Tiny(), 13);
  torch::NoGradGuard guard;
  const auto x = torch::rand({2, 3, 32, 32});
  const auto xh = torch::rand({2, 3, 32, 32});
  const auto fx = extract_features(det->backbone, x);
  const auto fxh = extract_features(det->backbone, xh);
  const auto manual = cross_fuse(det->spfm->cross_attn, det->spfm->encode(fx),
                                 det->spfm->encode(fxh), FusionMode::kSpfm);
  EXPECT_LT((manual - det->fused_features(x, xh)).abs().max().item<float>(), 1e-5);
}

TEST(DetectorConfig, RejectsInconsistentGeometry) {
  auto c = Tiny();
  c.backbone.input_side = 16;  // 4x4 features cannot hold an 8x8 window
  EXPECT_ANY_THROW(c.validate());
  c = Tiny();
  c.spfm.heads = 3;
  EXPECT_ANY_THROW(c.validate());
  EXPECT_EQ(fusion_mode_from_string(to_string(FusionMode::kAbsoluteDifference)),
            FusionMode::kAbsoluteDifference);
  EXPECT_THROW(fusion_mode_from_string("sum"), ParameterError);
}

}  // namespace
}  // namespace end4
