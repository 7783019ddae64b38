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

#ifndef END4_MANIFEST_HPP_
#define END4_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "end4/masks.hpp"

namespace end4 {

enum class Split { kTrain, kTest };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

// One image of the benchmark. label 1 marks an inpainted image and then
// `mask` and `prompt` are present; label 0 is an untouched image with both
// absent. `image_path` is relative to the manifest's directory unless
// absolute.
struct ManifestRecord {
  std::string id;
  std::string image_path;
  int label = 0;
  MaskSubset subset = MaskSubset::kCenter128;
  std::optional<MaskRegion> mask;
  std::optional<std::string> prompt;
  std::string generator;
  uint64_t seed = 0;
  Split split = Split::kTrain;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct ManifestValidation {
  // Per subset, train:test counts must equal train_parts:test_parts
  // (4000/1000 in the published benchmark).
  bool check_split_ratio = true;
  int train_parts = 4;
  int test_parts = 1;
};

// Throws ValidationError naming every offending id (or subset).
void validate_manifest(std::span<const ManifestRecord> records,
                       const ManifestValidation& options = {});

// Line-delimited JSON, one record per line; validates first.
void write_manifest(std::span<const ManifestRecord> records,
                    const std::filesystem::path& path,
                    const ManifestValidation& options = {});
// Throws DataError for unreadable files or malformed lines.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

std::string record_to_json(const ManifestRecord& record);
ManifestRecord record_from_json(const std::string& line);

std::filesystem::path resolve_image_path(const ManifestRecord& record,
                                         const std::filesystem::path& manifest_dir);

std::vector<ManifestRecord> filter_split(std::span<const ManifestRecord> records,
                                         Split split);

}  // namespace end4

#endif  // END4_MANIFEST_HPP_
