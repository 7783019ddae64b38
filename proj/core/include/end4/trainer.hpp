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

#ifndef END4_TRAINER_HPP_
#define END4_TRAINER_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "end4/augment.hpp"
#include "end4/checkpoint.hpp"
#include "end4/denoiser.hpp"
#include "end4/detector.hpp"
#include "end4/diffusion.hpp"
#include "end4/image.hpp"
#include "end4/losses.hpp"
#include "end4/manifest.hpp"

namespace end4 {

struct ModelConfig {
  DenoiserConfig denoiser;
  DetectorConfig detector;
  ScheduleConfig schedule;
  LossConfig loss;

  // Propagates a single input side to both networks.
  void set_input_side(int64_t side);
  void validate() const;
};

enum class EvalTimeMode { kFixed, kAverage };

struct EvalTimePolicy {
  EvalTimeMode mode = EvalTimeMode::kFixed;
  int64_t fixed_t = 500;
  std::vector<int64_t> average_ts{100, 300, 500, 700, 900};
  uint64_t noise_seed = 0;

  std::vector<int64_t> timesteps() const;
  std::string describe() const;
};

struct TrainConfig {
  int64_t batch_size = 8;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int64_t epochs = 1;
  uint64_t seed = 0;
  int64_t input_side = 256;
  int64_t t_min = 1;
  int64_t t_max = 1000;
  bool detach_reconstruction = false;
  EvalTimePolicy eval_t;
  bool augment = true;
  AugmentConfig augmentation;
  // Stop after this many optimizer steps in total (0 = run all epochs).
  int64_t max_steps = 0;
  int64_t eval_batch_size = 32;

  // Throws ConfigError.
  void validate(int64_t schedule_steps) const;
};

struct LabeledBatch {
  torch::Tensor images;  // [B, 3, S, S] in [-1, 1]
  torch::Tensor labels;  // [B] float, 0 = real, 1 = inpainted
  std::vector<std::string> ids;
};

struct StepStats {
  int64_t step = 0;
  double l_noise = 0.0;
  double l_ce = 0.0;
  double l_total = 0.0;
  double lr = 0.0;
};

// Adam with bias correction; moments are kept per named parameter so they
// serialize alongside the weights.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<std::pair<std::string, torch::Tensor>> params, double lr,
       double beta1, double beta2, double eps);

  void zero_grad();
  void step();

  double lr() const { return lr_; }
  int64_t steps() const { return steps_; }
  void set_steps(int64_t steps) { steps_ = steps; }
  const std::vector<std::pair<std::string, torch::Tensor>>& params() const { return params_; }
  std::vector<torch::Tensor>& first_moments() { return m_; }
  std::vector<torch::Tensor>& second_moments() { return v_; }
  const std::vector<torch::Tensor>& first_moments() const { return m_; }
  const std::vector<torch::Tensor>& second_moments() const { return v_; }

 private:
  std::vector<std::pair<std::string, torch::Tensor>> params_;
  std::vector<torch::Tensor> m_, v_;
  double lr_ = 1e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  int64_t steps_ = 0;
};

struct TrainState {
  ModelConfig model;
  TrainConfig train;
  NoiseSchedule schedule;
  UNetDenoiser denoiser{nullptr};
  Detector detector{nullptr};
  Adam optimizer;
  int64_t step = 0;
  torch::Generator generator;
  // Best validation AUC seen so far (percent) and its epoch.
  double best_auc = -1.0;
  int64_t best_epoch = -1;

  // Trainable parameters prefixed "denoiser." / "detector.".
  std::vector<std::pair<std::string, torch::Tensor>> named_parameters() const;

  Checkpoint to_checkpoint() const;
  static TrainState from_checkpoint(const Checkpoint& checkpoint);
  void save(const std::filesystem::path& path) const;
  static TrainState load(const std::filesystem::path& path);
  TrainState clone() const;
};

TrainState init_train_state(const ModelConfig& model, const TrainConfig& train);

// Equal when every tensor, counter and generator state matches bitwise.
bool states_equal(const TrainState& a, const TrainState& b);

StepStats train_step(TrainState& state, const LabeledBatch& batch);

// Gradient of L_ce alone with respect to the denoiser parameters, for one
// forward pass with the state's current generator (which is advanced).
std::vector<torch::Tensor> ce_denoiser_gradients(TrainState& state,
                                                 const LabeledBatch& batch);

// Images of one manifest, decoded once and kept in 8-bit form.
class ImageSet {
 public:
  static ImageSet load(const std::filesystem::path& manifest_path,
                       std::optional<Split> split = std::nullopt);
  ImageSet(std::vector<ManifestRecord> records, const std::filesystem::path& root);

  size_t size() const { return records_.size(); }
  const ManifestRecord& record(size_t i) const { return records_[i]; }
  const std::vector<ManifestRecord>& records() const { return records_; }
  const RgbImage& image(size_t i) const { return images_[i]; }
  void set_image(size_t i, RgbImage image) { images_[i] = std::move(image); }

 private:
  std::vector<ManifestRecord> records_;
  std::vector<RgbImage> images_;
};

// Unaugmented [B, 3, side, side] tensor for records [begin, end).
torch::Tensor stack_images(const ImageSet& set, size_t begin, size_t end,
                           int64_t side);

// Detector probability per image under the eval time policy. The noise for
// each image depends only on (id, t, noise_seed), so scores do not depend on
// batch composition.
torch::Tensor score_images(TrainState& state, const torch::Tensor& images,
                           const std::vector<std::string>& ids);

// x_SPFM for each image at the first eval time step.
torch::Tensor fused_features(TrainState& state, const torch::Tensor& images,
                             const std::vector<std::string>& ids);

struct TrainOutputs {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  double best_auc = -1.0;
  int64_t best_epoch = -1;
  int64_t steps = 0;
};

struct TrainPaths {
  std::filesystem::path train_manifest;
  std::filesystem::path val_manifest;
  std::filesystem::path out_dir;
  // Continue from a last.ckpt written by an earlier, interrupted call.
  std::optional<std::filesystem::path> resume_from;
  // Initialize denoiser weights from another checkpoint.
  std::optional<std::filesystem::path> warm_start_denoiser;
};

// Writes train_log.jsonl (one line per step), epochs.jsonl (validation per
// epoch), best.ckpt and last.ckpt into out_dir.
TrainOutputs train(const ModelConfig& model, const TrainConfig& config,
                   const TrainPaths& paths);

}  // namespace end4

#endif  // END4_TRAINER_HPP_
