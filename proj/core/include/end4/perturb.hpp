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

#ifndef END4_PERTURB_HPP_
#define END4_PERTURB_HPP_

#include <string>
#include <vector>

#include "end4/image.hpp"

namespace end4 {

enum class PerturbationKind { kJpeg, kGaussianBlur, kSaturation, kContrast };

std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& name);

struct Perturbation {
  PerturbationKind kind = PerturbationKind::kJpeg;
  // Quality q for jpeg, sigma for blur, factor s or c otherwise.
  double level = 90.0;

  // Throws ParameterError.
  void validate() const;
  std::string label() const;
};

struct PerturbationGrid {
  std::vector<double> jpeg{90, 70, 50, 30};
  std::vector<double> gaussian_blur{0.5, 1, 2};
  std::vector<double> saturation{0.5, 1.5, 2};
  std::vector<double> contrast{0.5, 1.5, 2};

  const std::vector<double>& levels(PerturbationKind kind) const;
  std::vector<Perturbation> expand(PerturbationKind kind) const;
};

RgbImage apply_perturbation(const RgbImage& image, const Perturbation& p);

// ITU-R BT.601 luma of an 8-bit pixel, as a real number.
double luma(double r, double g, double b);

}  // namespace end4

#endif  // END4_PERTURB_HPP_
