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

#include "end4/bench_gen.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "end4/errors.hpp"
#include "end4/prompts.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

std::string Padded(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

uint64_t SubsetSalt(MaskSubset subset) {
  return static_cast<uint64_t>(subset) + 1;
}

}  // namespace

void BenchConfig::validate() const {
  if (subsets.empty()) throw ConfigError("no subsets selected");
  if (train_parts <= 0 || test_parts < 0) throw ConfigError("invalid split parts");
  if (scenes_per_subset == 0 ||
      scenes_per_subset % static_cast<size_t>(train_parts + test_parts) != 0) {
    throw ConfigError("scenes_per_subset must be a positive multiple of " +
                      std::to_string(train_parts + test_parts));
  }
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  for (auto s : subsets) mask_spec(s).validate();
}

MaskSpec BenchConfig::mask_spec(MaskSubset subset) const {
  MaskSpec spec;
  spec.subset = subset;
  spec.image_side = image_side;
  spec.size_pool = size_pool;
  return spec;
}

uint64_t record_seed(uint64_t base_seed, MaskSubset subset, size_t index) {
  return mix_seed(base_seed, SubsetSalt(subset), index);
}

MaskDraw draw_mask(const BenchConfig& config, MaskSubset subset, size_t index,
                   const Scene& scene) {
  MaskDraw draw;
  draw.index = index;
  draw.subset = subset;
  draw.source_id = scene.source_id;
  draw.seed = record_seed(config.seed, subset, index);
  std::mt19937_64 rng(draw.seed);
  draw.mask = gen_mask(config.mask_spec(subset), rng, scene.annotations);
  const auto categories = scene.categories();
  draw.prompt = build_prompt(subset, categories, rng);
  return draw;
}

std::vector<MaskDraw> generate_mask_draws(const BenchConfig& config,
                                          MaskSubset subset, size_t count,
                                          const SceneSource& scenes) {
  std::vector<MaskDraw> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const auto scene = scenes.load(i % scenes.size(), SubsetSalt(subset));
    out.push_back(draw_mask(config, subset, i, scene));
  }
  return out;
}

std::string mask_draw_to_json(const MaskDraw& draw) {
  json bbox = {{"top", draw.mask.bbox.top},
               {"left", draw.mask.bbox.left},
               {"height", draw.mask.bbox.height},
               {"width", draw.mask.bbox.width}};
  json mask = {{"kind", draw.mask.kind == MaskRegion::Kind::kBBox ? "bbox" : "polygon_ref"},
               {"bbox", bbox}};
  if (draw.mask.polygon_ref) mask["polygon_ref"] = *draw.mask.polygon_ref;
  return json{{"index", draw.index},
              {"subset", to_string(draw.subset)},
              {"source_id", draw.source_id},
              {"mask", mask},
              {"prompt", draw.prompt},
              {"seed", draw.seed}}
      .dump();
}

std::vector<ManifestRecord> build_benchmark(const BenchConfig& config,
                                            const SceneSource& scenes,
                                            InpaintingBackend& backend,
                                            const std::filesystem::path& out_dir) {
  config.validate();
  if (scenes.size() < config.scenes_per_subset) {
    throw ConfigError("scene source has " + std::to_string(scenes.size()) +
                      " images, need " + std::to_string(config.scenes_per_subset));
  }
  const size_t per_subset = config.scenes_per_subset;
  const size_t train_count = per_subset * static_cast<size_t>(config.train_parts) /
                             static_cast<size_t>(config.train_parts + config.test_parts);
  const size_t jobs = per_subset * config.subsets.size();
  const size_t slots = config.include_real ? 2 : 1;
  std::vector<ManifestRecord> records(jobs * slots);

  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    while (true) {
      const size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (failure) return;
      }
      try {
        const auto subset = config.subsets[job / per_subset];
        const size_t index = job % per_subset;
        const auto scene = scenes.load(index, SubsetSalt(subset));
        const auto draw = draw_mask(config, subset, index, scene);
        const auto fake = synthesize(backend, scene.image, draw.mask, draw.prompt,
                                     draw.seed, scene.annotations);
        const auto split = index < train_count ? Split::kTrain : Split::kTest;
        const std::string stem = to_string(subset) + "/" + Padded(index);
        const std::string base_id = to_string(subset) + "-" + Padded(index);

        size_t slot = job * slots;
        if (config.include_real) {
          ManifestRecord real;
          real.id = base_id + "-real";
          real.image_path = "images/" + stem + "_real.png";
          real.label = 0;
          real.subset = subset;
          real.generator = "none";
          real.seed = draw.seed;
          real.split = split;
          write_png(scene.image, out_dir / real.image_path);
          records[slot++] = std::move(real);
        }
        ManifestRecord inpainted;
        inpainted.id = base_id + "-fake";
        inpainted.image_path = "images/" + stem + "_fake.png";
        inpainted.label = 1;
        inpainted.subset = subset;
        inpainted.mask = draw.mask;
        inpainted.prompt = draw.prompt;
        inpainted.generator = backend.name();
        inpainted.seed = draw.seed;
        inpainted.split = split;
        write_png(fake, out_dir / inpainted.image_path);
        records[slot] = std::move(inpainted);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  for (auto subset : config.subsets) {
    std::filesystem::create_directories(out_dir / "images" / to_string(subset));
  }
  std::vector<std::thread> pool;
  const size_t threads = std::min<size_t>(static_cast<size_t>(config.max_in_flight), jobs);
  for (size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ManifestValidation validation;
  validation.train_parts = config.train_parts;
  validation.test_parts = config.test_parts;
  validation.check_split_ratio = config.test_parts > 0;
  write_manifest(records, out_dir / "manifest.jsonl", validation);
  return records;
}

}  // namespace end4
