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

#include "end4/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "end4/errors.hpp"

namespace end4 {
namespace {

void CheckInputs(std::span<const int> labels, std::span<const double> values) {
  if (labels.size() != values.size()) {
    throw ParameterError("labels and scores differ in length");
  }
  if (labels.empty()) throw ParameterError("empty input");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ParameterError("labels must be 0 or 1");
  }
  for (double v : values) {
    if (std::isnan(v)) throw ParameterError("score is NaN");
  }
}

}  // namespace

double accuracy(std::span<const int> labels, std::span<const double> probs,
                double threshold) {
  CheckInputs(labels, probs);
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    correct += static_cast<int>(probs[i] >= threshold) == labels[i];
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  CheckInputs(labels, scores);
  const size_t n = labels.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks, with tied groups sharing their midrank. Ranks are
  // doubled so everything stays integral.
  uint64_t rank_sum2 = 0;
  uint64_t positives = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const uint64_t midrank2 = static_cast<uint64_t>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum2 += midrank2;
        ++positives;
      }
    }
    i = j;
  }
  const uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("auc needs both classes");
  }
  // 2U = rank_sum2 - P(P+1); AUC = U / (P N).
  const uint64_t u2 = rank_sum2 - positives * (positives + 1);
  return 100.0 * static_cast<double>(u2) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

}  // namespace end4
