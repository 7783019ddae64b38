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

#ifndef END4_ATTENTION_HPP_
#define END4_ATTENTION_HPP_

#include <torch/torch.h>

#include <cstdint>

namespace end4 {

// Scaled dot-product multi-head attention over token tensors [B, N, C].
// Queries come from `query`, keys and values from `context`.
class MultiHeadAttentionImpl : public torch::nn::Module {
 public:
  MultiHeadAttentionImpl(int64_t dim, int64_t heads);

  // When `weights` is non-null it receives the softmax matrix
  // [B, heads, Nq, Nk].
  torch::Tensor forward(const torch::Tensor& query,
                        const torch::Tensor& context,
                        torch::Tensor* weights = nullptr);

  int64_t dim() const { return dim_; }
  int64_t heads() const { return heads_; }

  torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr},
      out_proj{nullptr};

 private:
  int64_t dim_;
  int64_t heads_;
};
TORCH_MODULE(MultiHeadAttention);

// Pre-norm residual self-attention: x + MHA(LN(x), LN(x)).
class SelfAttentionImpl : public torch::nn::Module {
 public:
  SelfAttentionImpl(int64_t dim, int64_t heads);
  torch::Tensor forward(const torch::Tensor& tokens);
  // Row-stochastic attention matrix [B, heads, N, N] for `tokens`.
  torch::Tensor attention_weights(const torch::Tensor& tokens);

  torch::nn::LayerNorm norm{nullptr};
  MultiHeadAttention attn{nullptr};
};
TORCH_MODULE(SelfAttention);

// Pre-norm residual cross-attention: q + MHA(LN_q(q), LN_kv(kv)).
class CrossAttentionImpl : public torch::nn::Module {
 public:
  CrossAttentionImpl(int64_t dim, int64_t heads);
  torch::Tensor forward(const torch::Tensor& queries,
                        const torch::Tensor& keys_values);

  torch::nn::LayerNorm norm_q{nullptr}, norm_kv{nullptr};
  MultiHeadAttention attn{nullptr};
};
TORCH_MODULE(CrossAttention);

// [B, C, H, W] <-> [B, H*W, C].
torch::Tensor to_tokens(const torch::Tensor& feature_map);
torch::Tensor from_tokens(const torch::Tensor& tokens, int64_t height,
                          int64_t width);

}  // namespace end4

#endif  // END4_ATTENTION_HPP_
