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

#ifndef END4_TESTS_SUPPORT_FIXTURES_HPP_
#define END4_TESTS_SUPPORT_FIXTURES_HPP_

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "end4/backend.hpp"
#include "end4/bench_gen.hpp"
#include "end4/scene.hpp"
#include "end4/trainer.hpp"

namespace end4::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("end4-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline BenchConfig tiny_bench_config(int side, size_t scenes, uint64_t seed) {
  BenchConfig c;
  c.image_side = side;
  c.scenes_per_subset = scenes;
  c.seed = seed;
  return c;
}

// Balanced local-backend benchmark; returns the manifest path.
inline std::filesystem::path build_tiny_bench(const std::filesystem::path& dir, int side,
                                              size_t scenes, uint64_t seed) {
  const auto config = tiny_bench_config(side, scenes, seed);
  SyntheticSceneSource source(scenes, side, seed);
  LocalSyntheticBackend backend;
  build_benchmark(config, source, backend, dir);
  return dir / "manifest.jsonl";
}

inline ModelConfig tiny_model() {
  ModelConfig m;
  m.denoiser.base_channels = 8;
  m.denoiser.depth = 2;
  m.denoiser.time_embed_dim = 16;
  m.detector.backbone.stages = 2;
  m.detector.backbone.channels = 8;
  m.detector.spfm.heads = 2;
  m.set_input_side(32);
  return m;
}

inline TrainConfig tiny_train(uint64_t seed = 0) {
  TrainConfig t;
  t.input_side = 32;
  t.seed = seed;
  t.batch_size = 8;
  t.epochs = 1;
  t.eval_batch_size = 16;
  return t;
}

}  // namespace end4::testing

#endif  // END4_TESTS_SUPPORT_FIXTURES_HPP_
