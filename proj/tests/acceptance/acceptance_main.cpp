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

#include <torch/torch.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "end4/backend.hpp"
#include "end4/bench_gen.hpp"
#include "end4/detector.hpp"
#include "end4/diffusion.hpp"
#include "end4/denoiser.hpp"
#include "end4/errors.hpp"
#include "end4/evaluate.hpp"
#include "end4/losses.hpp"
#include "end4/masks.hpp"
#include "end4/metrics.hpp"
#include "end4/perturb.hpp"
#include "end4/prompts.hpp"
#include "end4/run_config.hpp"
#include "end4/scene.hpp"
#include "end4/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

namespace end4 {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome InversionIdentity() {
  const auto start = Clock::now();
  const auto sched = build_schedule(1000, 1e-4, 0.02);
  torch::manual_seed(1);
  double worst = 0.0;
  int64_t worst_t = -1;
  int over = 0;
  int64_t first_bad_t = 1000;
  for (int i = 0; i < 1000; ++i) {
    const int64_t t = torch::randint(0, 1000, {1}).item<int64_t>();
    const auto x0 = torch::rand({3, 64, 64}) * 2 - 1;
    const auto eps = torch::randn({3, 64, 64});
    const auto back = one_step_denoise(forward_noise(x0, t, eps, sched), t, eps, sched);
    const double err = (back - x0).abs().max().item<double>();
    if (err >= 1e-5) {
      ++over;
      first_bad_t = std::min(first_bad_t, t);
    }
    if (err > worst) {
      worst = err;
      worst_t = t;
    }
  }
  const double secs = Seconds(start);
  Outcome o;
  o.pass = worst < 1e-5 && secs < 30.0;
  o.detail = "max_abs_err=" + Fmt("%.3g", worst) + " at t=" + std::to_string(worst_t) +
             ", triples_over_1e-5=" + std::to_string(over) + "/1000";
  if (over > 0) o.detail += " (smallest failing t=" + std::to_string(first_bad_t) + ")";
  o.detail += ", runtime=" + Fmt("%.1f", secs) + "s";
  return o;
}

Outcome GradientSuite() {
  const auto start = Clock::now();
  std::vector<std::pair<std::string, testing::GradCheck>> results;
  torch::manual_seed(3);

  DenoiserConfig dc;
  dc.base_channels = 8;
  dc.depth = 2;
  dc.time_embed_dim = 16;
  dc.input_side = 16;
  auto denoiser = init_denoiser(dc, 1);
  denoiser->to(torch::kDouble);
  const auto xd = torch::randn({2, 3, 16, 16}, torch::kDouble);
  const auto td = torch::tensor({17, 640}, torch::kLong);
  results.emplace_back("denoiser", testing::check_gradients(
                                       testing::named_params(*denoiser),
                                       [&] { return predict_noise(denoiser, xd, td).pow(2).mean(); },
                                       64, 11));

  BackboneConfig bc;
  bc.stages = 2;
  bc.channels = 8;
  bc.input_side = 8;
  Backbone backbone(bc);
  backbone->to(torch::kDouble);
  const auto xb = torch::randn({2, 3, 8, 8}, torch::kDouble);
  results.emplace_back("backbone", testing::check_gradients(
                                       testing::named_params(*backbone),
                                       [&] { return extract_features(backbone, xb).pow(2).mean(); },
                                       64, 12));

  PyramidLayer layer(8, 2, 2, 4, 4);
  layer->to(torch::kDouble);
  const auto xp = torch::randn({2, 8, 4, 4}, torch::kDouble);
  results.emplace_back("pyramid", testing::check_gradients(
                                      testing::named_params(*layer),
                                      [&] { return layer->forward(xp).pow(2).mean(); }, 64, 13));

  SelfAttention self_attn(8, 2);
  self_attn->to(torch::kDouble);
  const auto tokens = torch::randn({2, 6, 8}, torch::kDouble);
  results.emplace_back("self_attention",
                       testing::check_gradients(
                           testing::named_params(*self_attn),
                           [&] { return self_attend(self_attn, tokens).pow(2).mean(); }, 64, 14));

  CrossAttention cross(8, 2);
  cross->to(torch::kDouble);
  const auto ta = torch::randn({2, 6, 8}, torch::kDouble);
  const auto tb = torch::randn({2, 6, 8}, torch::kDouble);
  results.emplace_back("cross_attention",
                       testing::check_gradients(
                           testing::named_params(*cross),
                           [&] { return cross_fuse(cross, ta, tb, FusionMode::kSpfm).pow(2).mean(); },
                           64, 15));

  torch::nn::Linear fc(16, 1);
  fc->to(torch::kDouble);
  const auto xf = torch::randn({4, 16}, torch::kDouble);
  results.emplace_back("classifier", testing::check_gradients(
                                         testing::named_params(*fc),
                                         [&] { return classify(fc, xf).log().sum(); }, 64, 16));

  const auto eps = torch::randn({4, 3, 4, 4}, torch::kDouble);
  auto eps_hat = torch::randn({4, 3, 4, 4}, torch::kDouble).requires_grad_(true);
  const auto y = torch::tensor({1.0, 0.0, 1.0, 1.0}, torch::kDouble);
  LossConfig lc;
  results.emplace_back("noise_loss", testing::check_gradients(
                                         {{"eps_hat", eps_hat}},
                                         [&] { return noise_loss(eps, eps_hat, y, lc); }, 64, 17));
  auto probs = (torch::rand({64}, torch::kDouble) * 0.8 + 0.1).requires_grad_(true);
  const auto labels = (torch::arange(64) % 2).to(torch::kDouble);
  results.emplace_back("ce_loss", testing::check_gradients(
                                      {{"p", probs}}, [&] { return ce_loss(labels, probs); }, 64,
                                      18));

  Outcome o;
  o.pass = true;
  std::string worst_name;
  double worst = 0.0;
  for (const auto& [name, r] : results) {
    o.pass = o.pass && r.checked >= 64 && r.max_relative_error < 1e-3;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = name;
    }
  }
  const double secs = Seconds(start);
  o.pass = o.pass && secs < 300.0;
  o.detail = std::to_string(results.size()) + " components x 64 samples, worst rel_err=" +
             Fmt("%.3g", worst) + " (" + worst_name + "), runtime=" + Fmt("%.1f", secs) + "s";
  return o;
}

Outcome LossMasking() {
  bool ok = true;
  std::vector<std::string> notes;
  torch::manual_seed(4);
  const auto eps = torch::randn({6, 3, 8, 8});
  const auto hat = torch::randn({6, 3, 8, 8});
  const auto zero = noise_loss(eps, hat, torch::zeros({6}), LossConfig{}).item<double>();
  if (zero != 0.0) {
    ok = false;
    notes.push_back("all-real L_noise=" + Fmt("%.3g", zero));
  }

  auto state = init_train_state(testing::tiny_model(), testing::tiny_train(4));
  LabeledBatch real;
  real.images = torch::rand({4, 3, 32, 32}) * 2 - 1;
  real.labels = torch::zeros({4});
  for (int i = 0; i < 4; ++i) real.ids.push_back("r" + std::to_string(i));
  const auto s_real = train_step(state, real);
  if (s_real.l_noise != 0.0) {
    ok = false;
    notes.push_back("train_step all-real L_noise=" + Fmt("%.3g", s_real.l_noise));
  }
  LabeledBatch mixed = real;
  mixed.labels = torch::tensor({1.0f, 0.0f, 1.0f, 0.0f});
  const auto s_mixed = train_step(state, mixed);
  for (const auto& s : {s_real, s_mixed}) {
    if (s.l_total != s.l_noise + s.l_ce) {
      ok = false;
      notes.push_back("L != L_noise + L_ce at step " + std::to_string(s.step));
    }
  }
  const auto ln = torch::tensor(0.25, torch::kDouble), lce = torch::tensor(0.5, torch::kDouble);
  if (total_loss(ln, lce).item<double>() != 0.75) ok = false;

  // Per-sample residuals 1..4 over 4 elements.
  auto e = torch::zeros({4, 4}, torch::kDouble);
  for (int i = 0; i < 4; ++i) e[i].fill_(i + 1.0);
  const auto h = torch::zeros({4, 4}, torch::kDouble);
  const auto lab = torch::tensor({1.0, 0.0, 1.0, 0.0}, torch::kDouble);
  const double d[4] = {0.5, 2.0, 4.5, 8.0};
  const std::map<NoiseTarget, double> expected{
      {NoiseTarget::kNone, 0.0},
      {NoiseTarget::kAll, (d[0] + d[1] + d[2] + d[3]) / 4},
      {NoiseTarget::kInpaintingOnly, (d[0] + d[2]) / 4},
      {NoiseTarget::kNatureOnly, (d[1] + d[3]) / 4},
  };
  for (const auto& [target, want] : expected) {
    LossConfig c;
    c.noise_target = noise_target_from_string(to_string(target));
    const double got = noise_loss(e, h, lab, c).item<double>();
    if (got != want) {
      ok = false;
      notes.push_back(to_string(target) + " gave " + Fmt("%.6g", got));
    }
  }
  Outcome o;
  o.pass = ok;
  o.detail = ok ? "all-real L_noise=0, L=L_noise+L_ce, 4 target modes match" : "";
  for (const auto& n : notes) o.detail += n + "; ";
  return o;
}

Outcome Coupling() {
  auto train = testing::tiny_train(5);
  LabeledBatch batch;
  torch::manual_seed(5);
  batch.images = torch::rand({4, 3, 32, 32}) * 2 - 1;
  batch.labels = torch::tensor({1.0f, 0.0f, 1.0f, 0.0f});
  batch.ids = {"a", "b", "c", "d"};
  auto coupled = init_train_state(testing::tiny_model(), train);
  size_t nonzero = 0, total = 0;
  for (const auto& g : ce_denoiser_gradients(coupled, batch)) {
    nonzero += static_cast<size_t>(g.ne(0).sum().item<int64_t>());
    total += static_cast<size_t>(g.numel());
  }
  train.detach_reconstruction = true;
  auto detached = init_train_state(testing::tiny_model(), train);
  double max_detached = 0.0;
  for (const auto& g : ce_denoiser_gradients(detached, batch)) {
    max_detached = std::max(max_detached, g.abs().max().item<double>());
  }
  Outcome o;
  o.pass = nonzero > 0 && max_detached == 0.0;
  o.detail = "coupled: " + std::to_string(nonzero) + "/" + std::to_string(total) +
             " denoiser grads nonzero; detached: max |grad|=" + Fmt("%.3g", max_detached);
  return o;
}

Outcome AucOracle() {
  std::mt19937_64 rng(6);
  int exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 2 + rng() % 49;
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      s[i] = static_cast<double>(rng() % 10) / 10.0;
    }
    y[0] = 0;
    y[1] = 1;
    uint64_t w2 = 0, p = 0, q = 0;
    for (size_t i = 0; i < n; ++i) (y[i] ? p : q) += 1;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (y[i] == 1 && y[j] == 0) w2 += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
      }
    }
    const double brute =
        100.0 * static_cast<double>(w2) / (2.0 * static_cast<double>(p) * static_cast<double>(q));
    exact += auc(y, s) == brute;
  }
  const std::vector<int> y{0, 0, 1, 1};
  const bool acc_ok = accuracy(y, std::vector<double>{0.1, 0.6, 0.5, 0.2}) == 50.0 &&
                      accuracy(y, std::vector<double>{0.0, 0.49, 0.5, 1.0}) == 100.0 &&
                      accuracy(y, std::vector<double>{0.9, 0.5, 0.1, 0.4}) == 0.0;
  Outcome o;
  o.pass = exact == 200 && acc_ok;
  o.detail = std::to_string(exact) + "/200 AUC sets exact, ACC examples " +
             (acc_ok ? "exact" : "MISMATCH");
  return o;
}

Outcome MaskGenerators() {
  std::vector<std::string> problems;
  const int draws = 10000;
  const std::vector<int> pool{16, 32, 64, 128, 256};
  for (auto subset : all_subsets()) {
    if (subset == MaskSubset::kCocoMask) continue;
    MaskSpec spec;
    spec.subset = subset;
    std::mt19937_64 rng(mix_seed(7, static_cast<uint64_t>(subset)));
    int bad = 0;
    for (int i = 0; i < draws; ++i) {
      const auto r = gen_mask(spec, rng);
      const auto& b = r.bbox;
      bool ok = bbox_inside(b, 512, 512) && b.height == b.width;
      switch (subset) {
        case MaskSubset::kCenter128: ok = ok && b == BBox{192, 192, 128, 128}; break;
        case MaskSubset::kRandom128: ok = ok && b.height == 128; break;
        case MaskSubset::kCenterRandom:
          ok = ok && std::count(pool.begin(), pool.end(), b.height) == 1 &&
               b.top == (512 - b.height) / 2 && b.left == b.top;
          break;
        case MaskSubset::kRandomRandom:
          ok = ok && std::count(pool.begin(), pool.end(), b.height) == 1;
          break;
        default: break;
      }
      bad += !ok;
    }
    if (bad) problems.push_back(to_string(subset) + ": " + std::to_string(bad) + " bad draws");
  }

  // cocoMask: 100 scenes x 100 draws, each against the scene's own annotations.
  const auto& categories = coco_category_pool();
  int coco_bad = 0, prompt_bad = 0;
  std::set<size_t> counts_seen;
  MaskSpec coco;
  coco.subset = MaskSubset::kCocoMask;
  std::mt19937_64 rng(8);
  for (uint64_t s = 0; s < 100; ++s) {
    const auto scene = generate_scene(512, s);
    for (int i = 0; i < 100; ++i) {
      const auto r = gen_mask(coco, rng, scene.annotations);
      bool ok = r.kind == MaskRegion::Kind::kPolygonRef && r.polygon_ref &&
                bbox_inside(r.bbox, 512, 512);
      const auto it = std::find_if(scene.annotations.begin(), scene.annotations.end(),
                                   [&](const Annotation& a) { return a.id == r.polygon_ref; });
      ok = ok && it != scene.annotations.end() && it->bounding_box(512) == r.bbox;
      coco_bad += !ok;

      // Prompts over original category sets of every size 1..10.
      const size_t n = 1 + static_cast<size_t>(i % 10);
      std::vector<std::string> own;
      std::sample(categories.begin(), categories.end(), std::back_inserter(own), n, rng);
      const auto parts = split_prompt(build_prompt(MaskSubset::kCocoMask, own, rng));
      const std::set<std::string> unique(parts.begin(), parts.end());
      bool pok = parts.size() == std::min<size_t>(n, 5) && unique.size() == parts.size();
      for (const auto& p : parts) pok = pok && std::count(own.begin(), own.end(), p) == 0;
      prompt_bad += !pok;
      counts_seen.insert(parts.size());
    }
  }
  if (coco_bad) problems.push_back("cocoMask: " + std::to_string(coco_bad) + " bad draws");
  if (prompt_bad) problems.push_back("prompts: " + std::to_string(prompt_bad) + " bad");
  Outcome o;
  o.pass = problems.empty();
  o.detail = "5 subsets x 10^4 draws, 10^4 cocoMask prompts (sizes " +
             std::to_string(*counts_seen.begin()) + ".." + std::to_string(*counts_seen.rbegin()) +
             ")";
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

Outcome PerturbationIdentities() {
  bool identities = true;
  double psnr_sum[3] = {0, 0, 0};
  int per_image_monotone = 0;
  const int qs[3] = {10, 50, 90};
  for (uint64_t s = 0; s < 10; ++s) {
    const auto img = generate_scene(64, 1000 + s).image;
    identities = identities &&
                 apply_perturbation(img, {PerturbationKind::kGaussianBlur, 0.0}) == img &&
                 apply_perturbation(img, {PerturbationKind::kSaturation, 1.0}) == img &&
                 apply_perturbation(img, {PerturbationKind::kContrast, 1.0}) == img;
    double p[3];
    for (int k = 0; k < 3; ++k) {
      p[k] = psnr(img, apply_perturbation(img, {PerturbationKind::kJpeg, double(qs[k])}));
      psnr_sum[k] += p[k];
    }
    per_image_monotone += p[0] < p[1] && p[1] < p[2];
  }
  const bool monotone = psnr_sum[0] < psnr_sum[1] && psnr_sum[1] < psnr_sum[2];
  Outcome o;
  o.pass = identities && monotone;
  o.detail = std::string("identities ") + (identities ? "exact" : "BROKEN") +
             ", mean PSNR q10/50/90 = " + Fmt("%.2f", psnr_sum[0] / 10) + "/" +
             Fmt("%.2f", psnr_sum[1] / 10) + "/" + Fmt("%.2f", psnr_sum[2] / 10) +
             " dB, monotone on " + std::to_string(per_image_monotone) + "/10 images";
  return o;
}

struct DeskRun {
  EvalReport report;
  std::string train_log;
  std::string epoch_log;
  double train_seconds = 0.0;
};

DeskRun TrainAndEvaluate(const RunConfig& config, const fs::path& manifest, const fs::path& out) {
  TrainPaths paths;
  paths.train_manifest = manifest;
  paths.val_manifest = manifest;
  paths.out_dir = out;
  const auto start = Clock::now();
  const auto result = train(config.model, config.train, paths);
  DeskRun run;
  run.train_seconds = Seconds(start);
  run.report = evaluate(result.last_checkpoint, manifest, std::nullopt, Split::kTest);
  run.train_log = ReadFile(out / "train_log.jsonl");
  run.epoch_log = ReadFile(out / "epochs.jsonl");
  std::ofstream(out / "report.json") << run.report.to_json() << "\n";
  return run;
}

struct DeskState {
  std::optional<DeskRun> spfm;
  std::optional<DeskRun> spfm_repeat;
  std::optional<DeskRun> absdiff;
  size_t train_count = 0;
  size_t test_count = 0;
  double bench_seconds = -1.0;
};

fs::path EnsureBench(DeskState& desk, const fs::path& work) {
  const auto manifest = work / "bench" / "manifest.jsonl";
  if (desk.bench_seconds >= 0.0) return manifest;
  const RunConfig config = desk_config();
  const auto start = Clock::now();
  SyntheticSceneSource source(config.bench.scenes_per_subset, config.bench.image_side, config.seed);
  LocalSyntheticBackend backend(config.backend.local);
  const auto records = build_benchmark(config.bench, source, backend, work / "bench");
  desk.bench_seconds = Seconds(start);
  for (const auto& r : records) (r.split == Split::kTrain ? desk.train_count : desk.test_count)++;
  return manifest;
}

Outcome DeskSanity(DeskState& desk, const fs::path& work) {
  const RunConfig config = desk_config();
  const auto manifest = EnsureBench(desk, work);
  const double bench_seconds = desk.bench_seconds;

  desk.spfm = TrainAndEvaluate(config, manifest, work / "spfm");
  RunConfig ablation = config;
  ablation.model.detector.spfm.fusion_mode = FusionMode::kAbsoluteDifference;
  desk.absdiff = TrainAndEvaluate(ablation, manifest, work / "absolute_difference");

  const auto& ours = desk.spfm->report.sections.front().overall;
  const auto& abs = desk.absdiff->report.sections.front().overall;
  // Budget: 15 wall-clock minutes on 8 cores, scaled to the cores available here.
  const unsigned cores = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  const double budget = 900.0 * 8.0 / cores;
  const double auc_v = ours.auc.value_or(0.0), acc_v = ours.acc.value_or(0.0);
  Outcome o;
  o.pass = desk.train_count == 2000 && desk.test_count == 500 && auc_v >= 85.0 &&
           acc_v >= 75.0 && desk.spfm->train_seconds <= budget;
  o.detail = "data " + std::to_string(desk.train_count) + "/" + std::to_string(desk.test_count) +
             " (built in " + Fmt("%.0f", bench_seconds) + "s); spfm AUC=" + Fmt("%.2f", auc_v) +
             " ACC=" + Fmt("%.2f", acc_v) + " train=" + Fmt("%.0f", desk.spfm->train_seconds) +
             "s (budget " + Fmt("%.0f", budget) + "s on " + std::to_string(cores) +
             " core(s)); absolute_difference AUC=" + Fmt("%.2f", abs.auc.value_or(0.0)) +
             " ACC=" + Fmt("%.2f", abs.acc.value_or(0.0)) + " train=" +
             Fmt("%.0f", desk.absdiff->train_seconds) + "s";
  return o;
}

Outcome Determinism(DeskState& desk, const fs::path& work) {
  const auto manifest = EnsureBench(desk, work);
  if (!desk.spfm) desk.spfm = TrainAndEvaluate(desk_config(), manifest, work / "spfm");
  desk.spfm_repeat = TrainAndEvaluate(desk_config(), manifest, work / "spfm_repeat");
  const bool logs = desk.spfm->train_log == desk.spfm_repeat->train_log &&
                    desk.spfm->epoch_log == desk.spfm_repeat->epoch_log;
  const bool reports = desk.spfm->report.to_json() == desk.spfm_repeat->report.to_json();
  Outcome o;
  o.pass = logs && reports && !desk.spfm->train_log.empty();
  o.detail = std::string("training logs ") + (logs ? "identical" : "DIFFER") + ", EvalReports " +
             (reports ? "identical" : "DIFFER") + " (" + desk.spfm->report.checkpoint_id + ")";
  return o;
}

std::set<int> ParseList(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace
}  // namespace end4

int main(int argc, char** argv) {
  using namespace end4;
  CLI::App app{"End4 acceptance criteria"};
  std::string only_text = "1,2,3,4,5,6,7,8,9";
  std::string expect_fail_text;
  std::string work_text;
  app.add_option("--only", only_text, "comma-separated criteria to run");
  app.add_option("--expect-fail", expect_fail_text,
                 "criteria known to be unattainable; their FAIL does not fail the run");
  app.add_option("--work-dir", work_text, "where desk-scale runs are written");
  CLI11_PARSE(app, argc, argv);
  const auto only = ParseList(only_text);
  const auto expect_fail = ParseList(expect_fail_text);

  std::unique_ptr<testing::TempDir> temp;
  fs::path work;
  if (work_text.empty()) {
    temp = std::make_unique<testing::TempDir>("acceptance");
    work = temp->path();
  } else {
    work = work_text;
    fs::create_directories(work);
  }

  DeskState desk;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"inversion identity", InversionIdentity},
      {"gradient suite", GradientSuite},
      {"loss masking", LossMasking},
      {"end-to-end coupling", Coupling},
      {"AUC oracle", AucOracle},
      {"mask generators", MaskGenerators},
      {"perturbation identities", PerturbationIdentities},
      {"desk-scale sanity", [&] { return DeskSanity(desk, work); }},
      {"determinism", [&] { return Determinism(desk, work); }},
  };

  int unexpected = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::string tag;
    if (!o.pass && expect_fail.count(id)) tag = " [known unattainable]";
    if (!o.pass && !expect_fail.count(id)) ++unexpected;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first
              << ": " << o.detail << tag << std::endl;
  }
  return unexpected == 0 ? 0 : 1;
}
