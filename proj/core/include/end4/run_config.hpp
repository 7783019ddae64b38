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

#ifndef END4_RUN_CONFIG_HPP_
#define END4_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "end4/backend.hpp"
#include "end4/bench_gen.hpp"
#include "end4/perturb.hpp"
#include "end4/trainer.hpp"

namespace end4 {

struct DataConfig {
  std::string train_manifest;
  std::string val_manifest;
  std::string eval_manifest;
  std::string out_root = "runs";
};

struct SourceConfig {
  std::string kind = "synthetic";  // synthetic | coco
  std::string coco_images;
  std::string coco_annotations;
  size_t coco_limit = 0;
};

struct BackendConfig {
  std::string kind = "local";  // local | remote
  LocalSyntheticBackend::Options local;
  // The auth token is read from the environment, never from the file.
  RemoteInpaintingBackend::Options remote;
};

struct RunConfig {
  uint64_t seed = 0;
  int threads = 0;  // 0 keeps the library default
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  BenchConfig bench;
  SourceConfig source;
  BackendConfig backend;
  PerturbationGrid perturbations;

  // Copies the single seed and input side into every consumer.
  void resolve();
  // Throws ConfigError.
  void validate() const;
};

// Small preset sized for CPU training on 64x64 synthetic scenes.
RunConfig desk_config();

std::string run_config_to_json(const RunConfig& config);
// Starts from the defaults; any key absent from the default tree is an error.
RunConfig run_config_from_json(const std::string& text);
// Each override is "dotted.key=value"; value is parsed as JSON, falling back
// to a plain string.
std::string apply_overrides(const std::string& text,
                            const std::vector<std::string>& overrides);
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

std::string model_config_to_json(const ModelConfig& model);
ModelConfig model_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& train);
TrainConfig train_config_from_json(const std::string& text);

// Creates <root>/<YYYYmmdd-HHMMSS>-<command>-seed<seed>, adding a numeric
// suffix rather than reusing an existing directory.
std::filesystem::path make_run_dir(const std::filesystem::path& root,
                                   const std::string& command, uint64_t seed);

}  // namespace end4

#endif  // END4_RUN_CONFIG_HPP_
