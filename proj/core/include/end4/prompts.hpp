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

#ifndef END4_PROMPTS_HPP_
#define END4_PROMPTS_HPP_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "end4/masks.hpp"

namespace end4 {

inline constexpr const char* kGeometricPrompt = "a photo";
inline constexpr int kReplacementCategories = 5;

// The 80 COCO object categories, in COCO id order.
const std::vector<std::string>& coco_category_pool();

// Draws min(n, m) categories from `pool`, excluding the image's own n
// distinct categories. Throws DataError when the pool cannot supply enough.
std::vector<std::string> draw_replacement_categories(
    std::span<const std::string> image_categories, std::mt19937_64& rng,
    std::span<const std::string> pool, int m = kReplacementCategories);

// "a photo" for the geometric subsets; a comma-separated list of
// replacement categories for cocoMask.
std::string build_prompt(MaskSubset subset,
                         std::span<const std::string> image_categories,
                         std::mt19937_64& rng,
                         std::span<const std::string> pool,
                         int m = kReplacementCategories);
std::string build_prompt(MaskSubset subset,
                         std::span<const std::string> image_categories,
                         std::mt19937_64& rng);

// Splits a cocoMask prompt back into its categories.
std::vector<std::string> split_prompt(const std::string& prompt);

}  // namespace end4

#endif  // END4_PROMPTS_HPP_
