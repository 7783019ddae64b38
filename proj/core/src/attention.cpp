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

#include "end4/attention.hpp"

#include <cmath>
#include <string>

#include "end4/errors.hpp"

namespace end4 {

MultiHeadAttentionImpl::MultiHeadAttentionImpl(int64_t dim, int64_t heads)
    : dim_(dim), heads_(heads) {
  if (dim <= 0 || heads <= 0 || dim % heads != 0) {
    throw ParameterError("attention dim " + std::to_string(dim) +
                         " not divisible by " + std::to_string(heads) +
                         " heads");
  }
  q_proj = register_module("q_proj", torch::nn::Linear(dim, dim));
  k_proj = register_module("k_proj", torch::nn::Linear(dim, dim));
  v_proj = register_module("v_proj", torch::nn::Linear(dim, dim));
  out_proj = register_module("out_proj", torch::nn::Linear(dim, dim));
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& query,
                                              const torch::Tensor& context,
                                              torch::Tensor* weights) {
  if (query.dim() != 3 || context.dim() != 3 || query.size(2) != dim_ ||
      context.size(2) != dim_ || query.size(0) != context.size(0)) {
    throw ShapeError("attention expects [B, N, " + std::to_string(dim_) +
                     "] tokens");
  }
  const int64_t batch = query.size(0);
  const int64_t nq = query.size(1);
  const int64_t nk = context.size(1);
  const int64_t head_dim = dim_ / heads_;

  auto split = [&](const torch::Tensor& t, int64_t n) {
    return t.view({batch, n, heads_, head_dim}).transpose(1, 2);
  };
  auto q = split(q_proj(query), nq);
  auto k = split(k_proj(context), nk);
  auto v = split(v_proj(context), nk);

  auto scores = torch::matmul(q, k.transpose(-2, -1)) /
                std::sqrt(static_cast<double>(head_dim));
  auto probs = torch::softmax(scores, -1);
  if (weights != nullptr) *weights = probs;
  auto mixed = torch::matmul(probs, v).transpose(1, 2).reshape({batch, nq, dim_});
  return out_proj(mixed);
}

SelfAttentionImpl::SelfAttentionImpl(int64_t dim, int64_t heads) {
  attn = register_module("attn", MultiHeadAttention(dim, heads));
  norm = register_module(
      "norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& tokens) {
  auto normed = norm(tokens);
  return tokens + attn(normed, normed);
}

torch::Tensor SelfAttentionImpl::attention_weights(const torch::Tensor& tokens) {
  torch::Tensor weights;
  auto normed = norm(tokens);
  attn(normed, normed, &weights);
  return weights;
}

CrossAttentionImpl::CrossAttentionImpl(int64_t dim, int64_t heads) {
  attn = register_module("attn", MultiHeadAttention(dim, heads));
  norm_q = register_module(
      "norm_q", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm_kv = register_module(
      "norm_kv", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
}

torch::Tensor CrossAttentionImpl::forward(const torch::Tensor& queries,
                                          const torch::Tensor& keys_values) {
  if (queries.sizes() != keys_values.sizes()) {
    throw ShapeError("cross attention expects equally shaped token sets");
  }
  return queries + attn(norm_q(queries), norm_kv(keys_values));
}

torch::Tensor to_tokens(const torch::Tensor& feature_map) {
  if (feature_map.dim() != 4) throw ShapeError("expected [B, C, H, W]");
  return feature_map.flatten(2).transpose(1, 2);
}

torch::Tensor from_tokens(const torch::Tensor& tokens, int64_t height,
                          int64_t width) {
  if (tokens.dim() != 3 || tokens.size(1) != height * width) {
    throw ShapeError("token count does not match spatial size");
  }
  return tokens.transpose(1, 2).reshape(
      {tokens.size(0), tokens.size(2), height, width});
}

}  // namespace end4
