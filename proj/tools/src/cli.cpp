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

#include "end4/cli.hpp"

#include <torch/torch.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "end4/backend.hpp"
#include "end4/bench_gen.hpp"
#include "end4/errors.hpp"
#include "end4/evaluate.hpp"
#include "end4/manifest.hpp"
#include "end4/perturb.hpp"
#include "end4/run_config.hpp"
#include "end4/scene.hpp"
#include "end4/trainer.hpp"

namespace end4 {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  std::string out_root;
  std::string run_dir;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON run config");
  cmd->add_option("--set", c.overrides, "dotted.key=value override (repeatable)");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--out-root", c.out_root, "parent of the run directory");
  cmd->add_option("--run-dir", c.run_dir, "exact output directory (must not exist)");
}

RunConfig ResolveConfig(const Common& c) {
  std::vector<std::string> overrides = c.overrides;
  if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
  if (!c.out_root.empty()) overrides.push_back("data.out_root=\"" + c.out_root + "\"");
  RunConfig config;
  if (c.config_path.empty()) {
    config = run_config_from_json(apply_overrides(run_config_to_json(RunConfig{}), overrides));
  } else {
    config = load_run_config(c.config_path, overrides);
  }
  if (config.threads > 0) torch::set_num_threads(config.threads);
  return config;
}

fs::path OpenRunDir(const Common& c, const RunConfig& config, const std::string& command) {
  fs::path dir;
  if (!c.run_dir.empty()) {
    dir = c.run_dir;
    if (fs::exists(dir) && !fs::is_empty(dir)) {
      throw ConfigError("run directory already exists: " + dir.string());
    }
    fs::create_directories(dir);
  } else {
    dir = make_run_dir(config.data.out_root, command, config.seed);
  }
  std::ofstream(dir / "resolved_config.json") << run_config_to_json(config) << "\n";
  std::cout << "run_dir " << dir.string() << "\n";
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write", {path.string()});
  out << text;
}

std::unique_ptr<SceneSource> MakeSource(const RunConfig& config, size_t count) {
  if (config.source.kind == "coco") {
    return std::make_unique<CocoSceneSource>(config.source.coco_images,
                                             config.source.coco_annotations,
                                             config.bench.image_side, config.source.coco_limit);
  }
  return std::make_unique<SyntheticSceneSource>(count, config.bench.image_side, config.seed);
}

std::unique_ptr<InpaintingBackend> MakeBackend(const RunConfig& config) {
  if (config.backend.kind == "remote") {
    auto options = config.backend.remote;
    const char* url = std::getenv("END4_BACKEND_URL");
    if (url && *url) options.url = url;
    const char* token = std::getenv("END4_BACKEND_TOKEN");
    if (token) options.token = token;
    if (options.url.empty()) throw ConfigError("remote backend needs END4_BACKEND_URL or backend.remote.url");
    return std::make_unique<RemoteInpaintingBackend>(options);
  }
  return std::make_unique<LocalSyntheticBackend>(config.backend.local);
}

std::optional<Split> ParseSplit(const std::string& name) {
  if (name == "all") return std::nullopt;
  try {
    return split_from_string(name);
  } catch (const Error&) {
    throw ParameterError("split must be train, test or all");
  }
}

std::vector<double> ParseLevels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError("bad level: " + item);
    }
  }
  if (out.empty()) throw ParameterError("no levels given");
  return out;
}

Perturbation ParsePerturbation(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ParameterError("perturbation must be kind:level");
  Perturbation p{perturbation_kind_from_string(spec.substr(0, colon)),
                 ParseLevels(spec.substr(colon + 1)).at(0)};
  p.validate();
  return p;
}

std::string ManifestOr(const std::string& flag, const std::string& fallback) {
  const auto& m = flag.empty() ? fallback : flag;
  if (m.empty()) throw ConfigError("no manifest given");
  return m;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"End4 inpainting-forgery detector", "end4"};
  app.require_subcommand(1);

  Common common;

  auto* gen_masks = app.add_subcommand("gen-masks", "draw masks and prompts for one subset");
  std::string subset_name;
  size_t mask_count = 0;
  std::string masks_out;
  gen_masks->add_option("--subset", subset_name, "mask subset")->required();
  gen_masks->add_option("--n", mask_count, "number of draws")->required();
  gen_masks->add_option("--out", masks_out, "output JSONL (default <run_dir>/masks.jsonl)");
  AddCommon(gen_masks, common);

  auto* synth = app.add_subcommand("synth", "build a benchmark with the configured backend");
  std::string bench_out;
  synth->add_option("--out", bench_out, "benchmark directory (default <run_dir>/bench)");
  AddCommon(synth, common);

  auto* train_cmd = app.add_subcommand("train", "train denoiser and detector jointly");
  std::string train_manifest, val_manifest, resume, warm_start;
  train_cmd->add_option("--train-manifest", train_manifest);
  train_cmd->add_option("--val-manifest", val_manifest);
  train_cmd->add_option("--resume", resume, "continue from a last.ckpt");
  train_cmd->add_option("--warm-start", warm_start, "initialize the denoiser from a checkpoint");
  AddCommon(train_cmd, common);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint, manifest, split_name = "test", perturb_spec, report_out;
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--manifest", manifest);
  eval_cmd->add_option("--split", split_name, "train | test | all");
  eval_cmd->add_option("--perturb", perturb_spec, "kind:level applied to every image");
  eval_cmd->add_option("--report", report_out, "report path (default <run_dir>/report.json)");
  AddCommon(eval_cmd, common);

  auto* perturb_cmd = app.add_subcommand("perturb-eval", "robustness sweep over one perturbation");
  std::string kind_name, levels_text;
  perturb_cmd->add_option("--checkpoint", checkpoint)->required();
  perturb_cmd->add_option("--manifest", manifest);
  perturb_cmd->add_option("--split", split_name, "train | test | all");
  perturb_cmd->add_option("--kind", kind_name, "jpeg | gaussian_blur | saturation | contrast")
      ->required();
  perturb_cmd->add_option("--levels", levels_text, "comma-separated levels (default: config grid)");
  perturb_cmd->add_option("--report", report_out);
  AddCommon(perturb_cmd, common);

  auto* features_cmd = app.add_subcommand("export-features", "write x_SPFM vectors as CSV");
  std::string features_out;
  features_cmd->add_option("--checkpoint", checkpoint)->required();
  features_cmd->add_option("--manifest", manifest);
  features_cmd->add_option("--split", split_name, "train | test | all");
  features_cmd->add_option("--out", features_out, "CSV path (default <run_dir>/features.csv)");
  AddCommon(features_cmd, common);

  auto* validate_cmd = app.add_subcommand("validate-manifest", "check a manifest");
  std::string validate_path;
  bool no_split_check = false;
  int train_parts = 4, test_parts = 1;
  validate_cmd->add_option("manifest", validate_path)->required();
  validate_cmd->add_flag("--no-split-check", no_split_check);
  validate_cmd->add_option("--train-parts", train_parts);
  validate_cmd->add_option("--test-parts", test_parts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (validate_cmd->parsed()) {
      try {
        const auto records = read_manifest(validate_path);
        ManifestValidation v;
        v.check_split_ratio = !no_split_check;
        v.train_parts = train_parts;
        v.test_parts = test_parts;
        validate_manifest(records, v);
        std::cout << "ok " << records.size() << " records\n";
        return kExitOk;
      } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
      }
    }

    const RunConfig config = ResolveConfig(common);

    if (gen_masks->parsed()) {
      const auto subset = mask_subset_from_string(subset_name);
      if (mask_count == 0) throw ParameterError("--n must be positive");
      const auto dir = OpenRunDir(common, config, "gen-masks");
      const auto source = MakeSource(config, mask_count);
      const auto draws = generate_mask_draws(config.bench, subset, mask_count, *source);
      std::string text;
      for (const auto& d : draws) text += mask_draw_to_json(d) + "\n";
      WriteText(masks_out.empty() ? dir / "masks.jsonl" : fs::path(masks_out), text);
      return kExitOk;
    }

    if (synth->parsed()) {
      const auto dir = OpenRunDir(common, config, "synth");
      const auto source = MakeSource(config, config.bench.scenes_per_subset);
      auto backend = MakeBackend(config);
      const fs::path out = bench_out.empty() ? dir / "bench" : fs::path(bench_out);
      const auto records = build_benchmark(config.bench, *source, *backend, out);
      std::cout << "manifest " << (out / "manifest.jsonl").string() << " (" << records.size()
                << " records)\n";
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      const auto dir = OpenRunDir(common, config, "train");
      TrainPaths paths;
      paths.train_manifest = ManifestOr(train_manifest, config.data.train_manifest);
      paths.val_manifest = ManifestOr(val_manifest, config.data.val_manifest);
      paths.out_dir = dir;
      if (!resume.empty()) paths.resume_from = fs::path(resume);
      if (!warm_start.empty()) paths.warm_start_denoiser = fs::path(warm_start);
      const auto result = train(config.model, config.train, paths);
      std::cout << "best_checkpoint " << result.best_checkpoint.string() << " best_auc "
                << result.best_auc << " best_epoch " << result.best_epoch << "\n";
      return kExitOk;
    }

    const auto split = ParseSplit(split_name);
    const auto eval_manifest = [&] { return ManifestOr(manifest, config.data.eval_manifest); };

    if (eval_cmd->parsed()) {
      std::optional<Perturbation> p;
      if (!perturb_spec.empty()) p = ParsePerturbation(perturb_spec);
      const auto dir = OpenRunDir(common, config, "eval");
      const auto report = evaluate(checkpoint, eval_manifest(), p, split);
      WriteText(report_out.empty() ? dir / "report.json" : fs::path(report_out),
                report.to_json() + "\n");
      const auto& overall = report.sections.front().overall;
      std::cout << "acc " << overall.acc.value_or(-1) << " auc " << overall.auc.value_or(-1)
                << "\n";
      return kExitOk;
    }

    if (perturb_cmd->parsed()) {
      const auto kind = perturbation_kind_from_string(kind_name);
      PerturbationGrid grid = config.perturbations;
      if (!levels_text.empty()) {
        const auto levels = ParseLevels(levels_text);
        switch (kind) {
          case PerturbationKind::kJpeg: grid.jpeg = levels; break;
          case PerturbationKind::kGaussianBlur: grid.gaussian_blur = levels; break;
          case PerturbationKind::kSaturation: grid.saturation = levels; break;
          case PerturbationKind::kContrast: grid.contrast = levels; break;
        }
      }
      const auto perturbations = grid.expand(kind);
      const auto dir = OpenRunDir(common, config, "perturb-eval");
      const auto report = perturbation_sweep(checkpoint, eval_manifest(), perturbations, split);
      WriteText(report_out.empty() ? dir / "report.json" : fs::path(report_out),
                report.to_json() + "\n");
      return kExitOk;
    }

    if (features_cmd->parsed()) {
      const auto dir = OpenRunDir(common, config, "export-features");
      const auto table = export_features(checkpoint, eval_manifest(), split);
      write_feature_table(table, features_out.empty() ? dir / "features.csv" : fs::path(features_out));
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

int dispatch(int argc, char** argv) {
  return dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace end4
