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

#ifndef END4_SCENE_HPP_
#define END4_SCENE_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "end4/image.hpp"
#include "end4/masks.hpp"

namespace end4 {

// A source image with its segmentation annotations, already at the
// benchmark side length.
struct Scene {
  std::string source_id;
  RgbImage image;
  std::vector<Annotation> annotations;

  std::vector<std::string> categories() const;
};

// Procedural stand-in for natural photographs: a shaded background with a
// few flat-colored objects, each carrying a COCO category and its polygon.
Scene generate_scene(int side, uint64_t seed);

class SceneSource {
 public:
  virtual ~SceneSource() = default;
  virtual size_t size() const = 0;
  // `subset_salt` lets procedural sources produce distinct scenes per subset.
  virtual Scene load(size_t index, uint64_t subset_salt) const = 0;
};

class SyntheticSceneSource : public SceneSource {
 public:
  SyntheticSceneSource(size_t count, int side, uint64_t seed)
      : count_(count), side_(side), seed_(seed) {}
  size_t size() const override { return count_; }
  Scene load(size_t index, uint64_t subset_salt) const override;

 private:
  size_t count_;
  int side_;
  uint64_t seed_;
};

// COCO instances file + image directory. Images are resized to `side` and
// polygons rescaled; crowd (RLE) annotations are skipped, as are images
// without any polygon annotation.
class CocoSceneSource : public SceneSource {
 public:
  CocoSceneSource(const std::filesystem::path& images_dir,
                  const std::filesystem::path& annotations_file, int side,
                  size_t limit = 0);
  size_t size() const override { return entries_.size(); }
  Scene load(size_t index, uint64_t subset_salt) const override;

 private:
  struct Entry {
    int64_t image_id;
    std::string file_name;
    int width;
    int height;
    std::vector<Annotation> annotations;
  };
  std::filesystem::path images_dir_;
  int side_;
  std::vector<Entry> entries_;
};

// Parses a COCO instances document into per-image annotations with category
// names resolved. Exposed for tests.
struct CocoIndex {
  struct Image {
    int64_t id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
    std::vector<Annotation> annotations;
  };
  std::vector<Image> images;
};
CocoIndex parse_coco_annotations(const std::string& json_text);

// Stable 64-bit mixing of several seeds (splitmix64 chain).
uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0);

}  // namespace end4

#endif  // END4_SCENE_HPP_
