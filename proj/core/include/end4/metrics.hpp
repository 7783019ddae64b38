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

#ifndef END4_METRICS_HPP_
#define END4_METRICS_HPP_

#include <span>

namespace end4 {

// Percentage of samples with (prob >= threshold) == label.
double accuracy(std::span<const int> labels, std::span<const double> probs,
                double threshold = 0.5);

// Mann-Whitney AUC in percent, ties credited 0.5. Throws
// UndefinedMetricError when only one class is present.
double auc(std::span<const int> labels, std::span<const double> scores);

}  // namespace end4

#endif  // END4_METRICS_HPP_
