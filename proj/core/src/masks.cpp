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

#include "end4/masks.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "end4/errors.hpp"

namespace end4 {
namespace {

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

BBox Centered(int image_side, int side) {
  const int offset = (image_side - side) / 2;
  return {offset, offset, side, side};
}

BBox RandomlyPlaced(int image_side, int side, std::mt19937_64& rng) {
  const int top = UniformInt(rng, 0, image_side - side);
  const int left = UniformInt(rng, 0, image_side - side);
  return {top, left, side, side};
}

bool HasArea(const Annotation& a) {
  for (const auto& poly : a.polygons) {
    if (poly.size() >= 6) return true;
  }
  return false;
}

}  // namespace

std::string to_string(MaskSubset subset) {
  switch (subset) {
    case MaskSubset::kCenter128:
      return "center128";
    case MaskSubset::kRandom128:
      return "random128";
    case MaskSubset::kCenterRandom:
      return "centerRandom";
    case MaskSubset::kRandomRandom:
      return "randomRandom";
    case MaskSubset::kCocoMask:
      return "cocoMask";
  }
  return "unknown";
}

MaskSubset mask_subset_from_string(const std::string& name) {
  for (auto s : all_subsets()) {
    if (to_string(s) == name) return s;
  }
  throw ParameterError("unknown mask subset '" + name + "'");
}

const std::array<MaskSubset, 5>& all_subsets() {
  static const std::array<MaskSubset, 5> kAll{
      MaskSubset::kCenter128, MaskSubset::kRandom128, MaskSubset::kCenterRandom,
      MaskSubset::kRandomRandom, MaskSubset::kCocoMask};
  return kAll;
}

int MaskSpec::scaled(int size) const {
  return static_cast<int>(std::lround(static_cast<double>(size) * image_side /
                                      static_cast<double>(reference_side)));
}

void MaskSpec::validate() const {
  if (image_side <= 0 || reference_side <= 0) {
    throw ParameterError("mask image sides must be positive");
  }
  auto check = [&](int size) {
    const int s = scaled(size);
    if (s < 1 || s > image_side) {
      throw ParameterError("mask side " + std::to_string(size) + " (scaled " +
                           std::to_string(s) + ") does not fit a " +
                           std::to_string(image_side) + " image");
    }
  };
  if (subset == MaskSubset::kCenter128 || subset == MaskSubset::kRandom128) {
    check(fixed_size);
  }
  if (subset == MaskSubset::kCenterRandom || subset == MaskSubset::kRandomRandom) {
    if (size_pool.empty()) throw ParameterError("empty mask size pool");
    for (int size : size_pool) check(size);
  }
}

BBox Annotation::bounding_box(int image_side) const {
  double x0 = image_side, y0 = image_side, x1 = 0, y1 = 0;
  for (const auto& poly : polygons) {
    for (size_t i = 0; i + 1 < poly.size(); i += 2) {
      x0 = std::min(x0, poly[i]);
      x1 = std::max(x1, poly[i]);
      y0 = std::min(y0, poly[i + 1]);
      y1 = std::max(y1, poly[i + 1]);
    }
  }
  const int left = std::clamp(static_cast<int>(std::floor(x0)), 0, image_side - 1);
  const int top = std::clamp(static_cast<int>(std::floor(y0)), 0, image_side - 1);
  const int right = std::clamp(static_cast<int>(std::ceil(x1)), left + 1, image_side);
  const int bottom = std::clamp(static_cast<int>(std::ceil(y1)), top + 1, image_side);
  return {top, left, bottom - top, right - left};
}

MaskRegion gen_mask(const MaskSpec& spec, std::mt19937_64& rng,
                    std::span<const Annotation> annotations) {
  spec.validate();
  MaskRegion region;
  switch (spec.subset) {
    case MaskSubset::kCenter128:
      region.bbox = Centered(spec.image_side, spec.scaled(spec.fixed_size));
      break;
    case MaskSubset::kRandom128:
      region.bbox =
          RandomlyPlaced(spec.image_side, spec.scaled(spec.fixed_size), rng);
      break;
    case MaskSubset::kCenterRandom: {
      const auto pick = UniformInt(rng, 0, static_cast<int>(spec.size_pool.size()) - 1);
      region.bbox = Centered(spec.image_side, spec.scaled(spec.size_pool[pick]));
      break;
    }
    case MaskSubset::kRandomRandom: {
      const auto pick = UniformInt(rng, 0, static_cast<int>(spec.size_pool.size()) - 1);
      region.bbox =
          RandomlyPlaced(spec.image_side, spec.scaled(spec.size_pool[pick]), rng);
      break;
    }
    case MaskSubset::kCocoMask: {
      std::vector<const Annotation*> usable;
      for (const auto& a : annotations) {
        if (HasArea(a)) usable.push_back(&a);
      }
      if (usable.empty()) {
        throw DataError("cocoMask needs at least one polygon annotation");
      }
      const auto* chosen =
          usable[UniformInt(rng, 0, static_cast<int>(usable.size()) - 1)];
      region.kind = MaskRegion::Kind::kPolygonRef;
      region.polygon_ref = chosen->id;
      region.bbox = chosen->bounding_box(spec.image_side);
      break;
    }
  }
  return region;
}

bool bbox_inside(const BBox& box, int width, int height) {
  return box.top >= 0 && box.left >= 0 && box.height > 0 && box.width > 0 &&
         box.top + box.height <= height && box.left + box.width <= width;
}

std::vector<uint8_t> rasterize_mask(const MaskRegion& region, int width,
                                    int height,
                                    std::span<const Annotation> annotations) {
  cv::Mat mask = cv::Mat::zeros(height, width, CV_8UC1);
  if (region.kind == MaskRegion::Kind::kBBox) {
    if (!bbox_inside(region.bbox, width, height)) {
      throw ParameterError("mask bbox outside the image");
    }
    mask(cv::Rect(region.bbox.left, region.bbox.top, region.bbox.width,
                  region.bbox.height))
        .setTo(255);
  } else {
    const Annotation* found = nullptr;
    for (const auto& a : annotations) {
      if (region.polygon_ref && a.id == *region.polygon_ref) found = &a;
    }
    if (found == nullptr) {
      throw DataError("polygon annotation not found",
                      {std::to_string(region.polygon_ref.value_or(-1))});
    }
    std::vector<std::vector<cv::Point>> polys;
    for (const auto& poly : found->polygons) {
      std::vector<cv::Point> pts;
      for (size_t i = 0; i + 1 < poly.size(); i += 2) {
        pts.emplace_back(static_cast<int>(std::lround(poly[i])),
                         static_cast<int>(std::lround(poly[i + 1])));
      }
      if (pts.size() >= 3) polys.push_back(std::move(pts));
    }
    cv::fillPoly(mask, polys, cv::Scalar(255));
  }
  std::vector<uint8_t> out(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(mask.ptr<uint8_t>(y), width, out.begin() + static_cast<ptrdiff_t>(y) * width);
  }
  return out;
}

}  // namespace end4
