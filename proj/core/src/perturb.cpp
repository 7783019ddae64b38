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

#include "end4/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "end4/errors.hpp"

namespace end4 {
namespace {

uint8_t ToByte(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

RgbImage Blur(const RgbImage& image, double sigma) {
  std::vector<float> hwc(image.pixels.begin(), image.pixels.end());
  const auto blurred = gaussian_blur_rgb(hwc, image.width, image.height, sigma);
  RgbImage out(image.width, image.height);
  for (size_t i = 0; i < blurred.size(); ++i) out.pixels[i] = ToByte(blurred[i]);
  return out;
}

// out = ref + f * (x - ref), where ref is per-pixel luma (saturation) or the
// mean luma of the whole image (contrast).
RgbImage Saturate(const RgbImage& image, double s) {
  RgbImage out(image.width, image.height);
  for (size_t i = 0; i < image.pixels.size(); i += 3) {
    const double r = image.pixels[i], g = image.pixels[i + 1], b = image.pixels[i + 2];
    const double y = luma(r, g, b);
    out.pixels[i] = ToByte(y + s * (r - y));
    out.pixels[i + 1] = ToByte(y + s * (g - y));
    out.pixels[i + 2] = ToByte(y + s * (b - y));
  }
  return out;
}

RgbImage Contrast(const RgbImage& image, double c) {
  double mean = 0.0;
  const size_t n = image.pixels.size() / 3;
  for (size_t i = 0; i < image.pixels.size(); i += 3) {
    mean += luma(image.pixels[i], image.pixels[i + 1], image.pixels[i + 2]);
  }
  mean /= static_cast<double>(std::max<size_t>(n, 1));
  RgbImage out(image.width, image.height);
  for (size_t i = 0; i < image.pixels.size(); ++i) {
    out.pixels[i] = ToByte(mean + c * (image.pixels[i] - mean));
  }
  return out;
}

}  // namespace

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kJpeg: return "jpeg";
    case PerturbationKind::kGaussianBlur: return "gaussian_blur";
    case PerturbationKind::kSaturation: return "saturation";
    case PerturbationKind::kContrast: return "contrast";
  }
  return "jpeg";
}

PerturbationKind perturbation_kind_from_string(const std::string& name) {
  if (name == "jpeg") return PerturbationKind::kJpeg;
  if (name == "gaussian_blur" || name == "blur") return PerturbationKind::kGaussianBlur;
  if (name == "saturation") return PerturbationKind::kSaturation;
  if (name == "contrast") return PerturbationKind::kContrast;
  throw ParameterError("unknown perturbation kind: " + name);
}

void Perturbation::validate() const {
  if (!std::isfinite(level)) throw ParameterError("perturbation level must be finite");
  if (kind == PerturbationKind::kJpeg) {
    if (level < 1 || level > 100 || level != std::floor(level)) {
      throw ParameterError("jpeg quality must be an integer in [1, 100]");
    }
  } else if (level < 0) {
    throw ParameterError(to_string(kind) + " level must be >= 0");
  }
}

std::string Perturbation::label() const {
  std::ostringstream os;
  os << to_string(kind) << ":" << level;
  return os.str();
}

const std::vector<double>& PerturbationGrid::levels(PerturbationKind kind) const {
  switch (kind) {
    case PerturbationKind::kJpeg: return jpeg;
    case PerturbationKind::kGaussianBlur: return gaussian_blur;
    case PerturbationKind::kSaturation: return saturation;
    case PerturbationKind::kContrast: return contrast;
  }
  return jpeg;
}

std::vector<Perturbation> PerturbationGrid::expand(PerturbationKind kind) const {
  std::vector<Perturbation> out;
  for (double level : levels(kind)) {
    Perturbation p{kind, level};
    p.validate();
    out.push_back(p);
  }
  return out;
}

double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

RgbImage apply_perturbation(const RgbImage& image, const Perturbation& p) {
  p.validate();
  switch (p.kind) {
    case PerturbationKind::kJpeg:
      return decode_image(encode_jpeg(image, static_cast<int>(p.level)));
    case PerturbationKind::kGaussianBlur:
      if (p.level == 0.0) return image;
      return Blur(image, p.level);
    case PerturbationKind::kSaturation:
      if (p.level == 1.0) return image;
      return Saturate(image, p.level);
    case PerturbationKind::kContrast:
      if (p.level == 1.0) return image;
      return Contrast(image, p.level);
  }
  return image;
}

}  // namespace end4
