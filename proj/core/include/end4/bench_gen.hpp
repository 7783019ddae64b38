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

#ifndef END4_BENCH_GEN_HPP_
#define END4_BENCH_GEN_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "end4/backend.hpp"
#include "end4/manifest.hpp"
#include "end4/masks.hpp"
#include "end4/scene.hpp"

namespace end4 {

struct BenchConfig {
  std::vector<MaskSubset> subsets{all_subsets().begin(), all_subsets().end()};
  int image_side = 512;
  std::vector<int> size_pool{16, 32, 64, 128, 256};
  // Source scenes per subset; each yields one fake and (optionally) one real
  // record. Must be divisible by train_parts + test_parts.
  size_t scenes_per_subset = 5000;
  int train_parts = 4;
  int test_parts = 1;
  bool include_real = true;
  uint64_t seed = 0;
  int max_in_flight = 4;

  void validate() const;
  MaskSpec mask_spec(MaskSubset subset) const;
};

// One mask + prompt draw, as emitted by `gen-masks`.
struct MaskDraw {
  size_t index = 0;
  MaskSubset subset = MaskSubset::kCenter128;
  std::string source_id;
  MaskRegion mask;
  std::string prompt;
  uint64_t seed = 0;
};

// Seed for scene `index` of `subset`; drives the mask, prompt and backend
// draws of that scene.
uint64_t record_seed(uint64_t base_seed, MaskSubset subset, size_t index);

// Deterministic in (config.seed, subset, index).
MaskDraw draw_mask(const BenchConfig& config, MaskSubset subset, size_t index,
                   const Scene& scene);

std::vector<MaskDraw> generate_mask_draws(const BenchConfig& config,
                                          MaskSubset subset, size_t count,
                                          const SceneSource& scenes);

std::string mask_draw_to_json(const MaskDraw& draw);

// Renders every subset through `backend` with at most max_in_flight
// concurrent requests, writes lossless PNGs under out_dir/images and the
// manifest to out_dir/manifest.jsonl. Records are ordered by
// (subset, scene index, real before fake) regardless of completion order.
std::vector<ManifestRecord> build_benchmark(const BenchConfig& config,
                                            const SceneSource& scenes,
                                            InpaintingBackend& backend,
                                            const std::filesystem::path& out_dir);

}  // namespace end4

#endif  // END4_BENCH_GEN_HPP_
