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

#include "end4/prompts.hpp"

#include <algorithm>
#include <set>

#include "end4/errors.hpp"

namespace end4 {
namespace {

constexpr const char* kSeparator = ", ";

}  // namespace

const std::vector<std::string>& coco_category_pool() {
  static const std::vector<std::string> kPool{
      "person",        "bicycle",      "car",           "motorcycle",
      "airplane",      "bus",          "train",         "truck",
      "boat",          "traffic light", "fire hydrant", "stop sign",
      "parking meter", "bench",        "bird",          "cat",
      "dog",           "horse",        "sheep",         "cow",
      "elephant",      "bear",         "zebra",         "giraffe",
      "backpack",      "umbrella",     "handbag",       "tie",
      "suitcase",      "frisbee",      "skis",          "snowboard",
      "sports ball",   "kite",         "baseball bat",  "baseball glove",
      "skateboard",    "surfboard",    "tennis racket", "bottle",
      "wine glass",    "cup",          "fork",          "knife",
      "spoon",         "bowl",         "banana",        "apple",
      "sandwich",      "orange",       "broccoli",      "carrot",
      "hot dog",       "pizza",        "donut",         "cake",
      "chair",         "couch",        "potted plant",  "bed",
      "dining table",  "toilet",       "tv",            "laptop",
      "mouse",         "remote",       "keyboard",      "cell phone",
      "microwave",     "oven",         "toaster",       "sink",
      "refrigerator",  "book",         "clock",         "vase",
      "scissors",      "teddy bear",   "hair drier",    "toothbrush"};
  return kPool;
}

std::vector<std::string> draw_replacement_categories(
    std::span<const std::string> image_categories, std::mt19937_64& rng,
    std::span<const std::string> pool, int m) {
  const std::set<std::string> own(image_categories.begin(), image_categories.end());
  if (own.empty()) {
    throw DataError("cocoMask prompt needs at least one image category");
  }
  std::vector<std::string> candidates;
  for (const auto& c : pool) {
    if (!own.contains(c) &&
        std::find(candidates.begin(), candidates.end(), c) == candidates.end()) {
      candidates.push_back(c);
    }
  }
  const size_t want = std::min(own.size(), static_cast<size_t>(m));
  if (candidates.size() < want) {
    throw DataError("category pool too small: need " + std::to_string(want) +
                    " replacements, have " + std::to_string(candidates.size()));
  }
  // Partial Fisher-Yates keeps the draw order reproducible.
  for (size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  candidates.resize(want);
  return candidates;
}

std::string build_prompt(MaskSubset subset,
                         std::span<const std::string> image_categories,
                         std::mt19937_64& rng,
                         std::span<const std::string> pool, int m) {
  if (subset != MaskSubset::kCocoMask) return kGeometricPrompt;
  const auto chosen = draw_replacement_categories(image_categories, rng, pool, m);
  std::string out;
  for (size_t i = 0; i < chosen.size(); ++i) {
    if (i > 0) out += kSeparator;
    out += chosen[i];
  }
  return out;
}

std::string build_prompt(MaskSubset subset,
                         std::span<const std::string> image_categories,
                         std::mt19937_64& rng) {
  return build_prompt(subset, image_categories, rng, coco_category_pool());
}

std::vector<std::string> split_prompt(const std::string& prompt) {
  std::vector<std::string> out;
  size_t start = 0;
  const std::string sep = kSeparator;
  while (true) {
    const auto pos = prompt.find(sep, start);
    out.push_back(prompt.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + sep.size();
  }
  return out;
}

}  // namespace end4
