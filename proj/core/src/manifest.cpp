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

#include "end4/manifest.hpp"

#include <fstream>
#include <map>
#include <set>

#include "end4/errors.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

json BBoxToJson(const BBox& b) {
  return {{"top", b.top}, {"left", b.left}, {"height", b.height}, {"width", b.width}};
}

BBox BBoxFromJson(const json& j) {
  return {j.at("top").get<int>(), j.at("left").get<int>(),
          j.at("height").get<int>(), j.at("width").get<int>()};
}

json MaskToJson(const MaskRegion& m) {
  if (m.kind == MaskRegion::Kind::kBBox) {
    return {{"kind", "bbox"}, {"bbox", BBoxToJson(m.bbox)}};
  }
  return {{"kind", "polygon_ref"},
          {"bbox", BBoxToJson(m.bbox)},
          {"polygon_ref", m.polygon_ref.value_or(-1)}};
}

MaskRegion MaskFromJson(const json& j) {
  MaskRegion m;
  const auto kind = j.at("kind").get<std::string>();
  m.bbox = BBoxFromJson(j.at("bbox"));
  if (kind == "bbox") {
    m.kind = MaskRegion::Kind::kBBox;
  } else if (kind == "polygon_ref") {
    m.kind = MaskRegion::Kind::kPolygonRef;
    m.polygon_ref = j.at("polygon_ref").get<int64_t>();
  } else {
    throw DataError("unknown mask kind '" + kind + "'");
  }
  return m;
}

}  // namespace

std::string to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ParameterError("unknown split '" + name + "'");
}

std::string record_to_json(const ManifestRecord& r) {
  json j;
  j["id"] = r.id;
  j["image_path"] = r.image_path;
  j["label"] = r.label;
  j["subset"] = to_string(r.subset);
  j["mask"] = r.mask ? MaskToJson(*r.mask) : json(nullptr);
  j["prompt"] = r.prompt ? json(*r.prompt) : json(nullptr);
  j["generator"] = r.generator;
  j["seed"] = r.seed;
  j["split"] = to_string(r.split);
  return j.dump();
}

ManifestRecord record_from_json(const std::string& line) {
  try {
    const auto j = json::parse(line);
    static const std::set<std::string> kKeys{"id",     "image_path", "label",
                                             "subset", "mask",       "prompt",
                                             "generator", "seed",    "split"};
    for (const auto& item : j.items()) {
      if (!kKeys.contains(item.key())) {
        throw DataError("unknown manifest field '" + item.key() + "'");
      }
    }
    ManifestRecord r;
    r.id = j.at("id").get<std::string>();
    r.image_path = j.at("image_path").get<std::string>();
    r.label = j.at("label").get<int>();
    r.subset = mask_subset_from_string(j.at("subset").get<std::string>());
    if (!j.at("mask").is_null()) r.mask = MaskFromJson(j.at("mask"));
    if (!j.at("prompt").is_null()) r.prompt = j.at("prompt").get<std::string>();
    r.generator = j.at("generator").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.split = split_from_string(j.at("split").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest line: ") + e.what());
  } catch (const ParameterError& e) {
    throw DataError(std::string("malformed manifest line: ") + e.what());
  }
}

void validate_manifest(std::span<const ManifestRecord> records,
                       const ManifestValidation& options) {
  std::vector<std::string> bad;
  std::set<std::string> seen;
  for (const auto& r : records) {
    const bool label_ok = r.label == 0 || r.label == 1;
    const bool fake_ok = r.label == 1 && r.mask.has_value() && r.prompt.has_value();
    const bool real_ok = r.label == 0 && !r.mask.has_value() && !r.prompt.has_value();
    const bool id_ok = !r.id.empty() && seen.insert(r.id).second;
    bool mask_ok = true;
    if (r.mask) {
      const auto& b = r.mask->bbox;
      mask_ok = b.top >= 0 && b.left >= 0 && b.height > 0 && b.width > 0;
      if (r.mask->kind == MaskRegion::Kind::kBBox && r.subset != MaskSubset::kCocoMask) {
        mask_ok = mask_ok && b.height == b.width;
      }
      if (r.mask->kind == MaskRegion::Kind::kPolygonRef) {
        mask_ok = mask_ok && r.mask->polygon_ref.has_value();
      }
    }
    if (!label_ok || !(fake_ok || real_ok) || !id_ok || !mask_ok ||
        r.image_path.empty()) {
      bad.push_back(r.id.empty() ? "<empty id>" : r.id);
    }
  }
  if (!bad.empty()) throw ValidationError("invalid manifest records", bad);

  if (options.check_split_ratio) {
    std::map<MaskSubset, std::pair<int64_t, int64_t>> counts;
    for (const auto& r : records) {
      auto& c = counts[r.subset];
      (r.split == Split::kTrain ? c.first : c.second) += 1;
    }
    std::vector<std::string> subsets;
    for (const auto& [subset, c] : counts) {
      if (c.first * options.test_parts != c.second * options.train_parts) {
        subsets.push_back(to_string(subset) + " (" + std::to_string(c.first) +
                          "/" + std::to_string(c.second) + ")");
      }
    }
    if (!subsets.empty()) {
      throw ValidationError("train/test split is not " +
                                std::to_string(options.train_parts) + ":" +
                                std::to_string(options.test_parts),
                            subsets);
    }
  }
}

void write_manifest(std::span<const ManifestRecord> records,
                    const std::filesystem::path& path,
                    const ManifestValidation& options) {
  validate_manifest(records, options);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest", {path.string()});
  for (const auto& r : records) out << record_to_json(r) << '\n';
  if (!out) throw DataError("short manifest write", {path.string()});
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest not found", {path.string()});
  std::vector<ManifestRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

std::filesystem::path resolve_image_path(const ManifestRecord& record,
                                         const std::filesystem::path& manifest_dir) {
  std::filesystem::path p(record.image_path);
  return p.is_absolute() ? p : manifest_dir / p;
}

std::vector<ManifestRecord> filter_split(std::span<const ManifestRecord> records,
                                         Split split) {
  std::vector<ManifestRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

}  // namespace end4
