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

#include "end4/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "end4/errors.hpp"
#include "end4/prompts.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

cv::Vec3f RandomColor(std::mt19937_64& rng) {
  return {static_cast<float>(Uniform(rng, 0.05, 0.95)),
          static_cast<float>(Uniform(rng, 0.05, 0.95)),
          static_cast<float>(Uniform(rng, 0.05, 0.95))};
}

std::vector<double> ObjectPolygon(std::mt19937_64& rng, int side) {
  const double cx = Uniform(rng, 0.15, 0.85) * side;
  const double cy = Uniform(rng, 0.15, 0.85) * side;
  const double rx = Uniform(rng, 0.08, 0.3) * side;
  const double ry = Uniform(rng, 0.08, 0.3) * side;
  const double rot = Uniform(rng, 0.0, std::numbers::pi);
  const int shape = std::uniform_int_distribution<int>(0, 2)(rng);
  const int vertices = shape == 0 ? 20 : (shape == 1 ? 4 : 3);
  std::vector<double> flat;
  for (int i = 0; i < vertices; ++i) {
    const double a = rot + 2.0 * std::numbers::pi * i / vertices;
    const double wobble = shape == 0 ? Uniform(rng, 0.9, 1.1) : 1.0;
    const double x = std::clamp(cx + rx * wobble * std::cos(a), 0.0, side - 1.0);
    const double y = std::clamp(cy + ry * wobble * std::sin(a), 0.0, side - 1.0);
    flat.push_back(x);
    flat.push_back(y);
  }
  return flat;
}

}  // namespace

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return SplitMix(SplitMix(SplitMix(a) ^ b) ^ c);
}

std::vector<std::string> Scene::categories() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& a : annotations) {
    if (seen.insert(a.category).second) out.push_back(a.category);
  }
  return out;
}

Scene generate_scene(int side, uint64_t seed) {
  if (side <= 0) throw ParameterError("scene side must be positive");
  std::mt19937_64 rng(seed);
  cv::Mat canvas(side, side, CV_32FC3);

  const cv::Vec3f top = RandomColor(rng);
  const cv::Vec3f bottom = RandomColor(rng);
  const double freq = Uniform(rng, 1.0, 4.0);
  const double phase = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double amp = Uniform(rng, 0.02, 0.08);
  for (int y = 0; y < side; ++y) {
    const float w = static_cast<float>(y) / std::max(1, side - 1);
    for (int x = 0; x < side; ++x) {
      const float wave = static_cast<float>(
          amp * std::sin(2.0 * std::numbers::pi * freq * (x + 0.5 * y) / side + phase));
      canvas.at<cv::Vec3f>(y, x) =
          top * (1.0f - w) + bottom * w + cv::Vec3f(wave, wave, wave);
    }
  }

  Scene scene;
  scene.source_id = "synthetic-" + std::to_string(seed);
  const auto& pool = coco_category_pool();
  const int objects = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int i = 0; i < objects; ++i) {
    Annotation ann;
    ann.id = static_cast<int64_t>(i + 1);
    ann.category_id =
        std::uniform_int_distribution<int>(0, static_cast<int>(pool.size()) - 1)(rng);
    ann.category = pool[static_cast<size_t>(ann.category_id)];
    ann.polygons.push_back(ObjectPolygon(rng, side));

    std::vector<cv::Point> pts;
    const auto& flat = ann.polygons.back();
    for (size_t k = 0; k + 1 < flat.size(); k += 2) {
      pts.emplace_back(static_cast<int>(std::lround(flat[k])),
                       static_cast<int>(std::lround(flat[k + 1])));
    }
    const cv::Vec3f color = RandomColor(rng);
    cv::fillPoly(canvas, std::vector<std::vector<cv::Point>>{pts},
                 cv::Scalar(color[0], color[1], color[2]));
    scene.annotations.push_back(std::move(ann));
  }

  // Soft optics plus faint sensor noise.
  cv::GaussianBlur(canvas, canvas, cv::Size(0, 0), 0.6);
  std::normal_distribution<float> noise(0.0f, 1.5f / 255.0f);
  scene.image = RgbImage(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const auto& px = canvas.at<cv::Vec3f>(y, x);
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(px[c] + noise(rng), 0.0f, 1.0f);
        scene.image.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return scene;
}

Scene SyntheticSceneSource::load(size_t index, uint64_t subset_salt) const {
  if (index >= count_) throw IndexError("scene index out of range");
  return generate_scene(side_, mix_seed(seed_, subset_salt, index));
}

CocoIndex parse_coco_annotations(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed COCO annotation file: ") + e.what());
  }
  std::map<int64_t, std::string> names;
  for (const auto& c : doc.value("categories", json::array())) {
    names[c.at("id").get<int64_t>()] = c.at("name").get<std::string>();
  }
  CocoIndex index;
  std::map<int64_t, size_t> by_id;
  for (const auto& im : doc.value("images", json::array())) {
    CocoIndex::Image image;
    image.id = im.at("id").get<int64_t>();
    image.file_name = im.at("file_name").get<std::string>();
    image.width = im.value("width", 0);
    image.height = im.value("height", 0);
    by_id[image.id] = index.images.size();
    index.images.push_back(std::move(image));
  }
  for (const auto& a : doc.value("annotations", json::array())) {
    const auto it = by_id.find(a.at("image_id").get<int64_t>());
    if (it == by_id.end()) continue;
    if (a.value("iscrowd", 0) != 0) continue;
    const auto& seg = a.value("segmentation", json());
    if (!seg.is_array()) continue;
    Annotation ann;
    ann.id = a.at("id").get<int64_t>();
    ann.category_id = a.at("category_id").get<int>();
    const auto name = names.find(ann.category_id);
    ann.category = name != names.end() ? name->second : std::to_string(ann.category_id);
    for (const auto& poly : seg) {
      ann.polygons.push_back(poly.get<std::vector<double>>());
    }
    index.images[it->second].annotations.push_back(std::move(ann));
  }
  return index;
}

CocoSceneSource::CocoSceneSource(const std::filesystem::path& images_dir,
                                 const std::filesystem::path& annotations_file,
                                 int side, size_t limit)
    : images_dir_(images_dir), side_(side) {
  std::ifstream in(annotations_file);
  if (!in) throw DataError("annotation file missing", {annotations_file.string()});
  std::stringstream buf;
  buf << in.rdbuf();
  auto index = parse_coco_annotations(buf.str());
  for (auto& image : index.images) {
    if (image.annotations.empty()) continue;
    entries_.push_back({image.id, image.file_name, image.width, image.height,
                        std::move(image.annotations)});
    if (limit != 0 && entries_.size() == limit) break;
  }
}

Scene CocoSceneSource::load(size_t index, uint64_t /*subset_salt*/) const {
  if (index >= entries_.size()) throw IndexError("scene index out of range");
  const auto& entry = entries_[index];
  const auto original = read_image(images_dir_ / entry.file_name);
  Scene scene;
  scene.source_id = "coco-" + std::to_string(entry.image_id);
  scene.image = resize(original, side_, side_);
  const double sx = static_cast<double>(side_) / original.width;
  const double sy = static_cast<double>(side_) / original.height;
  scene.annotations = entry.annotations;
  for (auto& ann : scene.annotations) {
    for (auto& poly : ann.polygons) {
      for (size_t i = 0; i + 1 < poly.size(); i += 2) {
        poly[i] *= sx;
        poly[i + 1] *= sy;
      }
    }
  }
  return scene;
}

}  // namespace end4
