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

#ifndef END4_MASKS_HPP_
#define END4_MASKS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace end4 {

enum class MaskSubset {
  kCenter128,
  kRandom128,
  kCenterRandom,
  kRandomRandom,
  kCocoMask,
};

std::string to_string(MaskSubset subset);
// Accepts the canonical names: center128, random128, centerRandom,
// randomRandom, cocoMask.
MaskSubset mask_subset_from_string(const std::string& name);
const std::array<MaskSubset, 5>& all_subsets();

// Mask sizes are given at `reference_side` (the benchmark's 512x512) and
// scaled by image_side / reference_side, so the defaults reproduce the
// benchmark geometry exactly and smaller desk-scale images keep the same
// relative coverage.
struct MaskSpec {
  MaskSubset subset = MaskSubset::kCenter128;
  int image_side = 512;
  std::vector<int> size_pool{16, 32, 64, 128, 256};
  int reference_side = 512;
  int fixed_size = 128;

  // Throws ParameterError when a scaled size falls outside [1, image_side].
  void validate() const;
  int scaled(int size) const;
};

struct BBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

// A segmentation annotation in image pixel coordinates. Each polygon is a
// flat [x0, y0, x1, y1, ...] list.
struct Annotation {
  int64_t id = 0;
  int category_id = 0;
  std::string category;
  std::vector<std::vector<double>> polygons;

  BBox bounding_box(int image_side) const;
};

struct MaskRegion {
  enum class Kind { kBBox, kPolygonRef };

  Kind kind = Kind::kBBox;
  // Exact region for kBBox; bounding box of the polygon for kPolygonRef.
  BBox bbox;
  // Annotation id for kPolygonRef.
  std::optional<int64_t> polygon_ref;

  friend bool operator==(const MaskRegion&, const MaskRegion&) = default;
};

// Throws ParameterError for invalid specs and DataError when cocoMask has no
// usable annotation.
MaskRegion gen_mask(const MaskSpec& spec, std::mt19937_64& rng,
                    std::span<const Annotation> annotations = {});

// Binary mask (0 / 255), row-major width * height. Polygon references are
// resolved against `annotations`.
std::vector<uint8_t> rasterize_mask(const MaskRegion& region, int width,
                                    int height,
                                    std::span<const Annotation> annotations = {});

bool bbox_inside(const BBox& box, int width, int height);

}  // namespace end4

#endif  // END4_MASKS_HPP_
