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

#include <cmath>

#include "end4/errors.hpp"
#include "end4/image.hpp"
#include "end4/perturb.hpp"
#include "end4/scene.hpp"

namespace end4 {
namespace {

RgbImage Sample(uint64_t seed, int side = 64) { return generate_scene(side, seed).image; }

double Psnr(const RgbImage& a, const RgbImage& b) {
  double se = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.pixels.size());
  return mse == 0.0 ? INFINITY : 10.0 * std::log10(255.0 * 255.0 / mse);
}

TEST(Perturb, IdentityLevels) {
  const auto img = Sample(1);
  EXPECT_EQ(apply_perturbation(img, {PerturbationKind::kGaussianBlur, 0.0}), img);
  EXPECT_EQ(apply_perturbation(img, {PerturbationKind::kSaturation, 1.0}), img);
  EXPECT_EQ(apply_perturbation(img, {PerturbationKind::kContrast, 1.0}), img);
}

TEST(Perturb, ZeroSaturationIsGray) {
  const auto out = apply_perturbation(Sample(2), {PerturbationKind::kSaturation, 0.0});
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      ASSERT_EQ(out.at(y, x, 0), out.at(y, x, 1));
      ASSERT_EQ(out.at(y, x, 1), out.at(y, x, 2));
    }
  }
}

TEST(Perturb, ZeroContrastIsFlat) {
  const auto img = Sample(3);
  const auto out = apply_perturbation(img, {PerturbationKind::kContrast, 0.0});
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      mean += 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    }
  }
  mean /= img.width * img.height;
  for (auto p : out.pixels) ASSERT_NEAR(p, mean, 0.5 + 1e-9);
}

TEST(Perturb, JpegHighQualityIsClose) {
  // 128x128 crop of skimage's "chelsea" photograph (CC0).
  const auto img = read_image(std::filesystem::path(END4_SOURCE_DIR) / "tests/data/chelsea_128.png");
  EXPECT_GT(Psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, 95})), 35.0);
  EXPECT_NEAR(psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, 95})),
              Psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, 95})), 1e-9);
}

TEST(Perturb, JpegDistortionMonotoneInQuality) {
  for (uint64_t s = 10; s < 15; ++s) {
    const auto img = Sample(s);
    const double p10 = Psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, 10}));
    const double p50 = Psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, 50}));
    const double p90 = Psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, 90}));
    EXPECT_LT(p10, p50);
    EXPECT_LT(p50, p90);
  }
}

TEST(Perturb, BlurReducesVariation) {
  const auto img = Sample(5);
  auto tv = [](const RgbImage& im) {
    double t = 0.0;
    for (int y = 0; y < im.height; ++y) {
      for (int x = 1; x < im.width; ++x) {
        t += std::abs(static_cast<int>(im.at(y, x, 0)) - im.at(y, x - 1, 0));
      }
    }
    return t;
  };
  const double t0 = tv(img);
  const double t1 = tv(apply_perturbation(img, {PerturbationKind::kGaussianBlur, 1.0}));
  const double t2 = tv(apply_perturbation(img, {PerturbationKind::kGaussianBlur, 2.0}));
  EXPECT_LT(t1, t0);
  EXPECT_LT(t2, t1);
}

TEST(Perturb, InvalidLevels) {
  const auto img = Sample(6, 16);
  EXPECT_THROW(apply_perturbation(img, {PerturbationKind::kJpeg, 0}), ParameterError);
  EXPECT_THROW(apply_perturbation(img, {PerturbationKind::kJpeg, 101}), ParameterError);
  EXPECT_THROW(apply_perturbation(img, {PerturbationKind::kJpeg, 50.5}), ParameterError);
  EXPECT_THROW(apply_perturbation(img, {PerturbationKind::kGaussianBlur, -1}), ParameterError);
  EXPECT_THROW(apply_perturbation(img, {PerturbationKind::kSaturation, -0.1}), ParameterError);
  EXPECT_THROW(apply_perturbation(img, {PerturbationKind::kContrast, NAN}), ParameterError);
}

TEST(Perturb, NamesAndGrid) {
  for (auto k : {PerturbationKind::kJpeg, PerturbationKind::kGaussianBlur,
                 PerturbationKind::kSaturation, PerturbationKind::kContrast}) {
    EXPECT_EQ(perturbation_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(perturbation_kind_from_string("rotate"), ParameterError);
  PerturbationGrid grid;
  EXPECT_EQ(grid.expand(PerturbationKind::kJpeg).size(), 4u);
  EXPECT_EQ(grid.expand(PerturbationKind::kContrast).size(), 3u);
  EXPECT_EQ((Perturbation{PerturbationKind::kJpeg, 70}).label(), "jpeg:70");
}

}  // namespace
}  // namespace end4
