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

#include "end4/run_config.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "end4/errors.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

template <typename T>
T Get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void CheckKeys(const json& given, const json& reference, const std::string& prefix) {
  if (!given.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.is_object() || !reference.contains(it.key())) {
      throw ConfigError("unknown config key: " + path);
    }
    const auto& ref = reference.at(it.key());
    if (ref.is_object()) {
      if (!it.value().is_object()) throw ConfigError("config key " + path + " must be an object");
      CheckKeys(it.value(), ref, path);
    }
  }
}

json ParseJson(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
}

json Strict(const json& defaults, const std::string& text) {
  const json given = ParseJson(text);
  if (!given.is_object()) throw ConfigError("config must be a JSON object");
  CheckKeys(given, defaults, "");
  json merged = defaults;
  merged.merge_patch(given);
  return merged;
}

json ModelJson(const ModelConfig& m) {
  const auto& b = m.detector.backbone;
  const auto& s = m.detector.spfm;
  return {{"denoiser",
           {{"base_channels", m.denoiser.base_channels},
            {"depth", m.denoiser.depth},
            {"time_embed_dim", m.denoiser.time_embed_dim}}},
          {"detector",
           {{"backbone", {{"stages", b.stages}, {"channels", b.channels}, {"blocks", b.blocks}}},
            {"spfm",
             {{"sizes", s.sizes}, {"heads", s.heads}, {"fusion_mode", to_string(s.fusion_mode)}}}}},
          {"schedule",
           {{"steps", m.schedule.steps},
            {"beta_start", m.schedule.beta_start},
            {"beta_end", m.schedule.beta_end}}},
          {"loss",
           {{"noise_target", to_string(m.loss.noise_target)},
            {"normalization", to_string(m.loss.normalization)}}}};
}

ModelConfig ModelFromJson(const json& j) {
  ModelConfig m;
  const auto& d = j.at("denoiser");
  m.denoiser.base_channels = Get<int64_t>(d, "base_channels");
  m.denoiser.depth = Get<int64_t>(d, "depth");
  m.denoiser.time_embed_dim = Get<int64_t>(d, "time_embed_dim");
  const auto& b = j.at("detector").at("backbone");
  m.detector.backbone.stages = Get<int64_t>(b, "stages");
  m.detector.backbone.channels = Get<int64_t>(b, "channels");
  m.detector.backbone.blocks = Get<std::vector<int64_t>>(b, "blocks");
  const auto& s = j.at("detector").at("spfm");
  m.detector.spfm.sizes = Get<std::array<int64_t, 2>>(s, "sizes");
  m.detector.spfm.heads = Get<int64_t>(s, "heads");
  try {
    m.detector.spfm.fusion_mode = fusion_mode_from_string(Get<std::string>(s, "fusion_mode"));
    const auto& l = j.at("loss");
    m.loss.noise_target = noise_target_from_string(Get<std::string>(l, "noise_target"));
    m.loss.normalization = normalization_from_string(Get<std::string>(l, "normalization"));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  const auto& sc = j.at("schedule");
  m.schedule.steps = Get<int64_t>(sc, "steps");
  m.schedule.beta_start = Get<double>(sc, "beta_start");
  m.schedule.beta_end = Get<double>(sc, "beta_end");
  return m;
}

json TrainJson(const TrainConfig& t) {
  const auto& a = t.augmentation;
  return {{"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"adam", {{"beta1", t.adam_beta1}, {"beta2", t.adam_beta2}, {"eps", t.adam_eps}}},
          {"epochs", t.epochs},
          {"input_side", t.input_side},
          {"t_sampling", {{"min", t.t_min}, {"max", t.t_max}}},
          {"detach_reconstruction", t.detach_reconstruction},
          {"eval_t",
           {{"mode", t.eval_t.mode == EvalTimeMode::kFixed ? "fixed" : "average"},
            {"fixed_t", t.eval_t.fixed_t},
            {"average_ts", t.eval_t.average_ts},
            {"noise_seed", t.eval_t.noise_seed}}},
          {"augment",
           {{"enabled", t.augment},
            {"flip_prob", a.flip_prob},
            {"jitter_prob", a.jitter_prob},
            {"grayscale_prob", a.grayscale_prob},
            {"brightness", a.brightness},
            {"contrast", a.contrast},
            {"saturation", a.saturation},
            {"hue", a.hue}}},
          {"max_steps", t.max_steps},
          {"eval_batch_size", t.eval_batch_size}};
}

TrainConfig TrainFromJson(const json& j) {
  TrainConfig t;
  t.batch_size = Get<int64_t>(j, "batch_size");
  t.learning_rate = Get<double>(j, "learning_rate");
  const auto& adam = j.at("adam");
  t.adam_beta1 = Get<double>(adam, "beta1");
  t.adam_beta2 = Get<double>(adam, "beta2");
  t.adam_eps = Get<double>(adam, "eps");
  t.epochs = Get<int64_t>(j, "epochs");
  t.input_side = Get<int64_t>(j, "input_side");
  t.t_min = Get<int64_t>(j.at("t_sampling"), "min");
  t.t_max = Get<int64_t>(j.at("t_sampling"), "max");
  t.detach_reconstruction = Get<bool>(j, "detach_reconstruction");
  const auto& e = j.at("eval_t");
  const auto mode = Get<std::string>(e, "mode");
  if (mode == "fixed") {
    t.eval_t.mode = EvalTimeMode::kFixed;
  } else if (mode == "average") {
    t.eval_t.mode = EvalTimeMode::kAverage;
  } else {
    throw ConfigError("eval_t.mode must be fixed or average");
  }
  t.eval_t.fixed_t = Get<int64_t>(e, "fixed_t");
  t.eval_t.average_ts = Get<std::vector<int64_t>>(e, "average_ts");
  t.eval_t.noise_seed = Get<uint64_t>(e, "noise_seed");
  const auto& a = j.at("augment");
  t.augment = Get<bool>(a, "enabled");
  t.augmentation.flip_prob = Get<double>(a, "flip_prob");
  t.augmentation.jitter_prob = Get<double>(a, "jitter_prob");
  t.augmentation.grayscale_prob = Get<double>(a, "grayscale_prob");
  t.augmentation.brightness = Get<double>(a, "brightness");
  t.augmentation.contrast = Get<double>(a, "contrast");
  t.augmentation.saturation = Get<double>(a, "saturation");
  t.augmentation.hue = Get<double>(a, "hue");
  t.augmentation.output_side = t.input_side;
  t.max_steps = Get<int64_t>(j, "max_steps");
  t.eval_batch_size = Get<int64_t>(j, "eval_batch_size");
  return t;
}

json RunJson(const RunConfig& c) {
  std::vector<std::string> subsets;
  for (auto s : c.bench.subsets) subsets.push_back(to_string(s));
  const auto& r = c.backend.remote;
  const auto& l = c.backend.local;
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"model", ModelJson(c.model)},
          {"train", TrainJson(c.train)},
          {"data",
           {{"train_manifest", c.data.train_manifest},
            {"val_manifest", c.data.val_manifest},
            {"eval_manifest", c.data.eval_manifest},
            {"out_root", c.data.out_root}}},
          {"bench",
           {{"subsets", subsets},
            {"image_side", c.bench.image_side},
            {"size_pool", c.bench.size_pool},
            {"scenes_per_subset", c.bench.scenes_per_subset},
            {"train_parts", c.bench.train_parts},
            {"test_parts", c.bench.test_parts},
            {"include_real", c.bench.include_real},
            {"max_in_flight", c.bench.max_in_flight}}},
          {"source",
           {{"kind", c.source.kind},
            {"coco_images", c.source.coco_images},
            {"coco_annotations", c.source.coco_annotations},
            {"coco_limit", c.source.coco_limit}}},
          {"backend",
           {{"kind", c.backend.kind},
            {"local",
             {{"blur_sigma", l.blur_sigma}, {"noise_std", l.noise_std}, {"hue_turns", l.hue_turns}}},
            {"remote",
             {{"url", r.url},
              {"name", r.name},
              {"steps", r.steps},
              {"timeout_seconds", r.timeout_seconds},
              {"max_retries", r.max_retries},
              {"backoff_seconds", r.backoff_seconds}}}}},
          {"perturbations",
           {{"jpeg", c.perturbations.jpeg},
            {"gaussian_blur", c.perturbations.gaussian_blur},
            {"saturation", c.perturbations.saturation},
            {"contrast", c.perturbations.contrast}}}};
}

RunConfig RunFromJson(const json& j) {
  RunConfig c;
  c.seed = Get<uint64_t>(j, "seed");
  c.threads = Get<int>(j, "threads");
  c.model = ModelFromJson(j.at("model"));
  c.train = TrainFromJson(j.at("train"));
  const auto& d = j.at("data");
  c.data.train_manifest = Get<std::string>(d, "train_manifest");
  c.data.val_manifest = Get<std::string>(d, "val_manifest");
  c.data.eval_manifest = Get<std::string>(d, "eval_manifest");
  c.data.out_root = Get<std::string>(d, "out_root");
  const auto& b = j.at("bench");
  c.bench.subsets.clear();
  try {
    for (const auto& s : Get<std::vector<std::string>>(b, "subsets")) {
      c.bench.subsets.push_back(mask_subset_from_string(s));
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  c.bench.image_side = Get<int>(b, "image_side");
  c.bench.size_pool = Get<std::vector<int>>(b, "size_pool");
  c.bench.scenes_per_subset = Get<size_t>(b, "scenes_per_subset");
  c.bench.train_parts = Get<int>(b, "train_parts");
  c.bench.test_parts = Get<int>(b, "test_parts");
  c.bench.include_real = Get<bool>(b, "include_real");
  c.bench.max_in_flight = Get<int>(b, "max_in_flight");
  const auto& s = j.at("source");
  c.source.kind = Get<std::string>(s, "kind");
  c.source.coco_images = Get<std::string>(s, "coco_images");
  c.source.coco_annotations = Get<std::string>(s, "coco_annotations");
  c.source.coco_limit = Get<size_t>(s, "coco_limit");
  const auto& be = j.at("backend");
  c.backend.kind = Get<std::string>(be, "kind");
  c.backend.local.blur_sigma = Get<double>(be.at("local"), "blur_sigma");
  c.backend.local.noise_std = Get<double>(be.at("local"), "noise_std");
  c.backend.local.hue_turns = Get<double>(be.at("local"), "hue_turns");
  const auto& r = be.at("remote");
  c.backend.remote.url = Get<std::string>(r, "url");
  c.backend.remote.name = Get<std::string>(r, "name");
  c.backend.remote.steps = Get<int>(r, "steps");
  c.backend.remote.timeout_seconds = Get<double>(r, "timeout_seconds");
  c.backend.remote.max_retries = Get<int>(r, "max_retries");
  c.backend.remote.backoff_seconds = Get<double>(r, "backoff_seconds");
  const auto& p = j.at("perturbations");
  c.perturbations.jpeg = Get<std::vector<double>>(p, "jpeg");
  c.perturbations.gaussian_blur = Get<std::vector<double>>(p, "gaussian_blur");
  c.perturbations.saturation = Get<std::vector<double>>(p, "saturation");
  c.perturbations.contrast = Get<std::vector<double>>(p, "contrast");
  return c;
}

json ParseOverrideValue(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::exception&) {
    return raw;
  }
}

}  // namespace

void RunConfig::resolve() {
  model.set_input_side(train.input_side);
  train.augmentation.output_side = train.input_side;
  train.seed = seed;
  bench.seed = seed;
}

void RunConfig::validate() const {
  try {
    model.validate();
    train.validate(model.schedule.steps);
    bench.validate();
    for (auto kind : {PerturbationKind::kJpeg, PerturbationKind::kGaussianBlur,
                      PerturbationKind::kSaturation, PerturbationKind::kContrast}) {
      perturbations.expand(kind);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (source.kind != "synthetic" && source.kind != "coco") {
    throw ConfigError("source.kind must be synthetic or coco");
  }
  if (backend.kind != "local" && backend.kind != "remote") {
    throw ConfigError("backend.kind must be local or remote");
  }
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

RunConfig desk_config() {
  RunConfig c;
  c.seed = 7;
  c.model.denoiser.base_channels = 16;
  c.model.denoiser.depth = 2;
  c.model.denoiser.time_embed_dim = 64;
  c.model.detector.backbone.stages = 3;
  c.model.detector.backbone.channels = 64;
  c.train.batch_size = 8;
  c.train.learning_rate = 1e-4;
  c.train.epochs = 4;
  c.train.input_side = 64;
  c.train.eval_batch_size = 50;
  c.bench.image_side = 64;
  c.bench.scenes_per_subset = 250;
  c.data.train_manifest = "bench/manifest.jsonl";
  c.data.val_manifest = "bench/manifest.jsonl";
  c.data.eval_manifest = "bench/manifest.jsonl";
  c.resolve();
  return c;
}

std::string run_config_to_json(const RunConfig& config) {
  return RunJson(config).dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  auto config = RunFromJson(Strict(RunJson(RunConfig{}), text));
  config.resolve();
  config.validate();
  return config;
}

std::string apply_overrides(const std::string& text,
                            const std::vector<std::string>& overrides) {
  json tree = ParseJson(text);
  const json defaults = RunJson(RunConfig{});
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override must be key=value: " + item);
    }
    const std::string key = item.substr(0, eq);
    json::json_pointer ptr;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (part.empty()) throw ConfigError("bad override key: " + key);
      ptr /= part;
    }
    if (!defaults.contains(ptr)) throw ConfigError("unknown config key: " + key);
    tree[ptr] = ParseOverrideValue(item.substr(eq + 1));
  }
  return tree.dump();
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(apply_overrides(buf.str(), overrides));
}

std::string model_config_to_json(const ModelConfig& model) {
  json j = ModelJson(model);
  j["input_side"] = model.denoiser.input_side;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  const json j = ParseJson(text);
  auto model = ModelFromJson(j);
  model.set_input_side(Get<int64_t>(j, "input_side"));
  return model;
}

std::string train_config_to_json(const TrainConfig& train) {
  json j = TrainJson(train);
  j["seed"] = train.seed;
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = ParseJson(text);
  auto train = TrainFromJson(j);
  train.seed = Get<uint64_t>(j, "seed");
  return train;
}

std::filesystem::path make_run_dir(const std::filesystem::path& root,
                                   const std::string& command, uint64_t seed) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  const std::string base = std::string(stamp) + "-" + command + "-seed" + std::to_string(seed);
  std::filesystem::create_directories(root);
  for (int i = 0;; ++i) {
    const auto dir = root / (i == 0 ? base : base + "-" + std::to_string(i));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

}  // namespace end4
