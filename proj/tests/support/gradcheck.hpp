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

#ifndef END4_TESTS_SUPPORT_GRADCHECK_HPP_
#define END4_TESTS_SUPPORT_GRADCHECK_HPP_

#include <torch/torch.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace end4::testing {

// Relative error with a floor on the denominator; pairs whose absolute
// difference is below abs_tol count as exact.
inline double relative_error(double analytic, double numeric, double floor = 1e-7,
                             double abs_tol = 1e-10) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_tol) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  int checked = 0;
  double max_relative_error = 0.0;
  std::string worst;
};

// Central differences on `samples` scalar entries drawn uniformly from the
// flattened `tensors` (double precision leaves). `loss` recomputes the scalar
// objective from scratch.
inline GradCheck check_gradients(std::vector<std::pair<std::string, torch::Tensor>> tensors,
                                 const std::function<torch::Tensor()>& loss, int samples,
                                 uint64_t seed, double h = 1e-5) {
  for (auto& [name, t] : tensors) {
    if (t.grad().defined()) t.mutable_grad() = torch::Tensor();
  }
  loss().backward();
  std::vector<int64_t> offsets;
  int64_t total = 0;
  for (const auto& [name, t] : tensors) {
    offsets.push_back(total);
    total += t.numel();
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int64_t> pick(0, total - 1);
  GradCheck result;
  for (int s = 0; s < samples; ++s) {
    const int64_t flat = pick(rng);
    size_t k = tensors.size() - 1;
    while (offsets[k] > flat) --k;
    auto& t = tensors[k].second;
    const int64_t idx = flat - offsets[k];
    const double analytic =
        t.grad().defined() ? t.grad().reshape(-1)[idx].item<double>() : 0.0;
    auto view = t.detach().view(-1);
    const double orig = view[idx].item<double>();
    double plus, minus;
    {
      torch::NoGradGuard guard;
      view[idx] = orig + h;
      plus = loss().item<double>();
      view[idx] = orig - h;
      minus = loss().item<double>();
      view[idx] = orig;
    }
    const double numeric = (plus - minus) / (2 * h);
    const double err = relative_error(analytic, numeric);
    ++result.checked;
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst = tensors[k].first + "[" + std::to_string(idx) +
                     "] analytic=" + std::to_string(analytic) +
                     " numeric=" + std::to_string(numeric);
    }
  }
  return result;
}

inline std::vector<std::pair<std::string, torch::Tensor>> named_params(
    const torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : module.named_parameters()) out.emplace_back(item.key(), item.value());
  return out;
}

}  // namespace end4::testing

#endif  // END4_TESTS_SUPPORT_GRADCHECK_HPP_
