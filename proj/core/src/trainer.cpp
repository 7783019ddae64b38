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

#include "end4/trainer.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "end4/errors.hpp"
#include "end4/metrics.hpp"
#include "end4/run_config.hpp"
#include "end4/scene.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

constexpr char kStateFormat[] = "end4-train-state";

uint64_t HashId(const std::string& id) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

torch::Generator MakeGenerator(uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

torch::Tensor IndexTensor(int64_t batch, int64_t t) {
  return torch::full({batch}, schedule_index_for_step(t), torch::kLong);
}

// Per-image noise that depends only on (id, t, seed).
torch::Tensor EvalNoise(const std::vector<std::string>& ids, int64_t t,
                        uint64_t seed, at::IntArrayRef chw) {
  std::vector<torch::Tensor> eps;
  eps.reserve(ids.size());
  for (const auto& id : ids) {
    auto gen = MakeGenerator(mix_seed(HashId(id), seed, static_cast<uint64_t>(t)));
    eps.push_back(torch::randn(chw, gen, torch::kFloat));
  }
  return torch::stack(eps);
}

torch::Tensor Reconstruct(TrainState& state, const torch::Tensor& images,
                          const std::vector<std::string>& ids, int64_t t) {
  const auto eps = EvalNoise(ids, t, state.train.eval_t.noise_seed,
                             images.sizes().slice(1));
  const auto idx = IndexTensor(images.size(0), t);
  const auto x_t = forward_noise(images, idx, eps, state.schedule);
  const auto eps_hat = predict_noise(state.denoiser, x_t, idx);
  return one_step_denoise(x_t, idx, eps_hat, state.schedule);
}

struct Forward {
  torch::Tensor eps, eps_hat, probs;
};

Forward RunForward(TrainState& state, const LabeledBatch& batch) {
  const auto& cfg = state.train;
  const int64_t b = batch.images.size(0);
  auto t = torch::randint(cfg.t_min, cfg.t_max + 1, {b}, state.generator, torch::kLong);
  const auto idx = t - 1;
  Forward f;
  f.eps = torch::randn(batch.images.sizes(), state.generator, torch::kFloat);
  const auto x_t = forward_noise(batch.images, idx, f.eps, state.schedule);
  f.eps_hat = predict_noise(state.denoiser, x_t, idx);
  auto x0_hat = one_step_denoise(x_t, idx, f.eps_hat, state.schedule);
  if (cfg.detach_reconstruction) x0_hat = x0_hat.detach();
  f.probs = state.detector->forward(batch.images, x0_hat);
  return f;
}

void CheckBatch(const TrainState& state, const LabeledBatch& batch) {
  const auto side = state.model.denoiser.input_side;
  if (batch.images.dim() != 4 || batch.images.size(1) != 3 ||
      batch.images.size(2) != side || batch.images.size(3) != side) {
    throw ShapeError("batch images must be [B, 3, " + std::to_string(side) + ", " +
                     std::to_string(side) + "]");
  }
  if (batch.labels.dim() != 1 || batch.labels.size(0) != batch.images.size(0)) {
    throw ShapeError("labels must be [B]");
  }
}

std::string JoinIds(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ",";
    out += id;
  }
  return out;
}

bool TensorsEqual(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes() == b.sizes() && a.scalar_type() == b.scalar_type() &&
         torch::equal(a, b);
}

}  // namespace

void ModelConfig::set_input_side(int64_t side) {
  denoiser.input_side = side;
  detector.backbone.input_side = side;
}

void ModelConfig::validate() const {
  denoiser.validate();
  detector.validate();
  if (denoiser.input_side != detector.backbone.input_side) {
    throw ConfigError("denoiser and detector input sides differ");
  }
  if (schedule.steps < 1) throw ConfigError("schedule needs at least one step");
}

std::vector<int64_t> EvalTimePolicy::timesteps() const {
  if (mode == EvalTimeMode::kFixed) return {fixed_t};
  return average_ts;
}

std::string EvalTimePolicy::describe() const {
  std::ostringstream os;
  if (mode == EvalTimeMode::kFixed) {
    os << "fixed:" << fixed_t;
  } else {
    os << "average:";
    for (size_t i = 0; i < average_ts.size(); ++i) os << (i ? "," : "") << average_ts[i];
  }
  return os.str();
}

void TrainConfig::validate(int64_t schedule_steps) const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be >= 1");
  if (t_min < 1 || t_max > schedule_steps || t_min > t_max) {
    throw ConfigError("t range must lie within [1, " + std::to_string(schedule_steps) + "]");
  }
  const auto ts = eval_t.timesteps();
  if (ts.empty()) throw ConfigError("eval_t needs at least one time step");
  for (auto t : ts) {
    if (t < 1 || t > schedule_steps) throw ConfigError("eval_t outside schedule");
  }
}

Adam::Adam(std::vector<std::pair<std::string, torch::Tensor>> params, double lr,
           double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, p] : params_) {
    m_.push_back(torch::zeros_like(p));
    v_.push_back(torch::zeros_like(p));
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) {
    if (p.grad().defined()) {
      p.grad().detach_();
      p.grad().zero_();
    }
  }
}

void Adam::step() {
  torch::NoGradGuard guard;
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].second;
    const auto& g = p.grad();
    if (!g.defined()) continue;
    m_[i].mul_(beta1_).add_(g, 1.0 - beta1_);
    v_[i].mul_(beta2_).addcmul_(g, g, 1.0 - beta2_);
    const auto denom = (v_[i] / bc2).sqrt_().add_(eps_);
    p.addcdiv_(m_[i], denom, -lr_ / bc1);
  }
}

std::vector<std::pair<std::string, torch::Tensor>> TrainState::named_parameters() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : denoiser->named_parameters()) {
    out.emplace_back("denoiser." + item.key(), item.value());
  }
  for (const auto& item : detector->named_parameters()) {
    out.emplace_back("detector." + item.key(), item.value());
  }
  return out;
}

Checkpoint TrainState::to_checkpoint() const {
  Checkpoint ckpt;
  json meta = {{"format", kStateFormat},
               {"model", json::parse(model_config_to_json(model))},
               {"train", json::parse(train_config_to_json(train))},
               {"step", step},
               {"adam_steps", optimizer.steps()},
               {"best_auc", best_auc},
               {"best_epoch", best_epoch}};
  ckpt.metadata_json = meta.dump();
  add_module_tensors(ckpt, "denoiser.", *denoiser);
  add_module_tensors(ckpt, "detector.", *detector);
  const auto& params = optimizer.params();
  for (size_t i = 0; i < params.size(); ++i) {
    ckpt.add("adam.m." + params[i].first, optimizer.first_moments()[i]);
    ckpt.add("adam.v." + params[i].first, optimizer.second_moments()[i]);
  }
  ckpt.add("rng.generator", generator.get_state());
  return ckpt;
}

TrainState TrainState::from_checkpoint(const Checkpoint& ckpt) {
  json meta;
  try {
    meta = json::parse(ckpt.metadata_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  if (meta.value("format", "") != kStateFormat) {
    throw DataError("checkpoint is not a training state");
  }
  const auto model = model_config_from_json(meta.at("model").dump());
  const auto train = train_config_from_json(meta.at("train").dump());
  TrainState state = init_train_state(model, train);
  load_module_tensors(ckpt, "denoiser.", *state.denoiser);
  load_module_tensors(ckpt, "detector.", *state.detector);
  const auto& params = state.optimizer.params();
  torch::NoGradGuard guard;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& name = params[i].first;
    if (ckpt.contains("adam.m." + name)) {
      state.optimizer.first_moments()[i].copy_(ckpt.get("adam.m." + name));
      state.optimizer.second_moments()[i].copy_(ckpt.get("adam.v." + name));
    }
  }
  state.optimizer.set_steps(meta.at("adam_steps").get<int64_t>());
  state.step = meta.at("step").get<int64_t>();
  state.best_auc = meta.at("best_auc").get<double>();
  state.best_epoch = meta.at("best_epoch").get<int64_t>();
  if (ckpt.contains("rng.generator")) {
    state.generator.set_state(ckpt.get("rng.generator").clone());
  }
  return state;
}

void TrainState::save(const std::filesystem::path& path) const {
  write_checkpoint(to_checkpoint(), path);
}

TrainState TrainState::load(const std::filesystem::path& path) {
  return from_checkpoint(read_checkpoint(path));
}

TrainState TrainState::clone() const {
  return from_checkpoint(decode_checkpoint(encode_checkpoint(to_checkpoint())));
}

TrainState init_train_state(const ModelConfig& model, const TrainConfig& train) {
  TrainState state;
  state.model = model;
  state.model.set_input_side(train.input_side);
  state.model.validate();
  state.train = train;
  state.schedule = build_schedule(state.model.schedule);
  train.validate(state.schedule.steps());
  state.denoiser = init_denoiser(state.model.denoiser, mix_seed(train.seed, 1));
  state.detector = init_detector(state.model.detector, mix_seed(train.seed, 2));
  state.optimizer = Adam(state.named_parameters(), train.learning_rate, train.adam_beta1,
                         train.adam_beta2, train.adam_eps);
  state.generator = MakeGenerator(mix_seed(train.seed, 3));
  return state;
}

bool states_equal(const TrainState& a, const TrainState& b) {
  const auto ca = a.to_checkpoint();
  const auto cb = b.to_checkpoint();
  if (ca.metadata_json != cb.metadata_json || ca.tensors.size() != cb.tensors.size()) {
    return false;
  }
  for (size_t i = 0; i < ca.tensors.size(); ++i) {
    if (ca.tensors[i].first != cb.tensors[i].first ||
        !TensorsEqual(ca.tensors[i].second, cb.tensors[i].second)) {
      return false;
    }
  }
  return true;
}

StepStats train_step(TrainState& state, const LabeledBatch& batch) {
  CheckBatch(state, batch);
  const auto f = RunForward(state, batch);
  const auto l_noise = noise_loss(f.eps, f.eps_hat, batch.labels, state.model.loss);
  const auto l_ce = ce_loss(batch.labels, f.probs);
  torch::Tensor loss;
  try {
    loss = total_loss(l_noise, l_ce);
  } catch (const NumericError&) {
    throw NumericError("non-finite loss at step " + std::to_string(state.step + 1) +
                       "; batch ids: " + JoinIds(batch.ids));
  }
  state.optimizer.zero_grad();
  loss.backward();
  state.optimizer.step();
  ++state.step;

  StepStats stats;
  stats.step = state.step;
  stats.l_noise = l_noise.item<double>();
  stats.l_ce = l_ce.item<double>();
  stats.l_total = total_loss(stats.l_noise, stats.l_ce);
  stats.lr = state.optimizer.lr();
  return stats;
}

std::vector<torch::Tensor> ce_denoiser_gradients(TrainState& state,
                                                 const LabeledBatch& batch) {
  CheckBatch(state, batch);
  const auto f = RunForward(state, batch);
  const auto l_ce = ce_loss(batch.labels, f.probs);
  std::vector<torch::Tensor> params;
  for (const auto& p : state.denoiser->parameters()) params.push_back(p);
  auto grads = torch::autograd::grad({l_ce}, params, {}, false, false, true);
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].defined()) grads[i] = torch::zeros_like(params[i]);
  }
  return grads;
}

ImageSet ImageSet::load(const std::filesystem::path& manifest_path,
                        std::optional<Split> split) {
  auto records = read_manifest(manifest_path);
  if (split) records = filter_split(records, *split);
  return ImageSet(std::move(records), manifest_path.parent_path());
}

ImageSet::ImageSet(std::vector<ManifestRecord> records, const std::filesystem::path& root)
    : records_(std::move(records)) {
  images_.resize(records_.size());
  std::vector<std::string> missing;
  for (size_t i = 0; i < records_.size(); ++i) {
    const auto path = resolve_image_path(records_[i], root);
    if (!std::filesystem::exists(path)) {
      missing.push_back(path.string());
      continue;
    }
    images_[i] = read_image(path);
  }
  if (!missing.empty()) throw DataError("missing image files", missing);
}

torch::Tensor stack_images(const ImageSet& set, size_t begin, size_t end, int64_t side) {
  std::vector<torch::Tensor> out;
  for (size_t i = begin; i < end; ++i) {
    auto t = to_tensor(set.image(i));
    if (t.size(1) != side || t.size(2) != side) t = resize_tensor(t, side);
    out.push_back(t);
  }
  return torch::stack(out);
}

torch::Tensor score_images(TrainState& state, const torch::Tensor& images,
                           const std::vector<std::string>& ids) {
  torch::NoGradGuard guard;
  const auto ts = state.train.eval_t.timesteps();
  torch::Tensor sum;
  for (auto t : ts) {
    const auto x0_hat = Reconstruct(state, images, ids, t);
    const auto p = state.detector->forward(images, x0_hat).to(torch::kDouble);
    sum = sum.defined() ? sum + p : p;
  }
  return sum / static_cast<double>(ts.size());
}

torch::Tensor fused_features(TrainState& state, const torch::Tensor& images,
                             const std::vector<std::string>& ids) {
  torch::NoGradGuard guard;
  const auto t = state.train.eval_t.timesteps().front();
  const auto x0_hat = Reconstruct(state, images, ids, t);
  return state.detector->fused_features(images, x0_hat);
}

namespace {

std::pair<double, double> Validate(TrainState& state, const ImageSet& val) {
  std::vector<int> labels;
  std::vector<double> probs;
  const auto side = state.model.denoiser.input_side;
  const auto bs = static_cast<size_t>(state.train.eval_batch_size);
  for (size_t begin = 0; begin < val.size(); begin += bs) {
    const size_t end = std::min(val.size(), begin + bs);
    std::vector<std::string> ids;
    for (size_t i = begin; i < end; ++i) {
      ids.push_back(val.record(i).id);
      labels.push_back(val.record(i).label);
    }
    const auto p = score_images(state, stack_images(val, begin, end, side), ids);
    for (int64_t i = 0; i < p.size(0); ++i) probs.push_back(p[i].item<double>());
  }
  return {accuracy(labels, probs), auc(labels, probs)};
}

LabeledBatch MakeBatch(const TrainState& state, const ImageSet& set,
                       const std::vector<size_t>& order, size_t begin, size_t end,
                       int64_t epoch) {
  const auto& cfg = state.train;
  auto aug = cfg.augmentation;
  aug.output_side = cfg.input_side;
  LabeledBatch batch;
  std::vector<torch::Tensor> images;
  std::vector<float> labels;
  for (size_t k = begin; k < end; ++k) {
    const size_t i = order[k];
    auto t = to_tensor(set.image(i));
    if (cfg.augment) {
      std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch) + 1, k));
      t = augment(t, rng, aug);
    } else if (t.size(1) != cfg.input_side || t.size(2) != cfg.input_side) {
      t = resize_tensor(t, cfg.input_side);
    }
    images.push_back(t);
    labels.push_back(static_cast<float>(set.record(i).label));
    batch.ids.push_back(set.record(i).id);
  }
  batch.images = torch::stack(images);
  batch.labels = torch::tensor(labels, torch::kFloat);
  return batch;
}

std::vector<size_t> EpochOrder(uint64_t seed, int64_t epoch, size_t n) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x0de5ULL, static_cast<uint64_t>(epoch)));
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace

TrainOutputs train(const ModelConfig& model, const TrainConfig& config,
                   const TrainPaths& paths) {
  ModelConfig resolved = model;
  resolved.set_input_side(config.input_side);
  resolved.validate();
  config.validate(resolved.schedule.steps);

  const auto train_set = ImageSet::load(paths.train_manifest, Split::kTrain);
  if (train_set.size() == 0) throw ConfigError("training manifest has no train records");
  const auto val_set = ImageSet::load(paths.val_manifest, Split::kTest);
  if (val_set.size() == 0) throw ConfigError("validation manifest has no test records");

  std::filesystem::create_directories(paths.out_dir);
  TrainOutputs out;
  out.best_checkpoint = paths.out_dir / "best.ckpt";
  out.last_checkpoint = paths.out_dir / "last.ckpt";

  TrainState state;
  if (paths.resume_from) {
    state = TrainState::load(*paths.resume_from);
    state.train.epochs = config.epochs;
    state.train.max_steps = config.max_steps;
  } else {
    state = init_train_state(resolved, config);
    if (paths.warm_start_denoiser) {
      load_module_tensors(read_checkpoint(*paths.warm_start_denoiser), "denoiser.",
                          *state.denoiser);
    }
  }

  const auto mode = paths.resume_from ? std::ios::app : std::ios::trunc;
  std::ofstream step_log(paths.out_dir / "train_log.jsonl", std::ios::out | mode);
  std::ofstream epoch_log(paths.out_dir / "epochs.jsonl", std::ios::out | mode);
  if (!step_log || !epoch_log) throw ConfigError("cannot open logs in " + paths.out_dir.string());

  const auto& cfg = state.train;
  const size_t n = train_set.size();
  const auto bs = static_cast<size_t>(cfg.batch_size);
  const auto steps_per_epoch = static_cast<int64_t>((n + bs - 1) / bs);
  int64_t limit = cfg.epochs * steps_per_epoch;
  if (cfg.max_steps > 0) limit = std::min(limit, cfg.max_steps);

  if (cfg.epochs == 0) {
    state.save(out.best_checkpoint);
    state.save(out.last_checkpoint);
    return out;
  }

  std::vector<size_t> order;
  int64_t order_epoch = -1;
  while (state.step < limit) {
    const int64_t epoch = state.step / steps_per_epoch;
    const auto pos = static_cast<size_t>(state.step % steps_per_epoch);
    if (epoch != order_epoch) {
      order = EpochOrder(cfg.seed, epoch, n);
      order_epoch = epoch;
    }
    const size_t begin = pos * bs;
    const size_t end = std::min(n, begin + bs);
    const auto batch = MakeBatch(state, train_set, order, begin, end, epoch);
    const auto stats = train_step(state, batch);
    step_log << json{{"step", stats.step},
                     {"l_noise", stats.l_noise},
                     {"l_ce", stats.l_ce},
                     {"l_total", stats.l_total},
                     {"lr", stats.lr}}
                    .dump()
             << "\n";

    if (state.step % steps_per_epoch == 0) {
      step_log.flush();
      const auto [acc, auc_value] = Validate(state, val_set);
      const bool improved = auc_value > state.best_auc;
      if (improved) {
        state.best_auc = auc_value;
        state.best_epoch = epoch;
      }
      epoch_log << json{{"epoch", epoch},
                        {"step", state.step},
                        {"val_acc", acc},
                        {"val_auc", auc_value},
                        {"best", improved}}
                       .dump()
                << "\n";
      epoch_log.flush();
      std::fprintf(stderr, "epoch %lld step %lld val_acc %.2f val_auc %.2f\n",
                   static_cast<long long>(epoch), static_cast<long long>(state.step),
                   acc, auc_value);
      if (improved) state.save(out.best_checkpoint);
      state.save(out.last_checkpoint);
    }
  }
  if (state.step % steps_per_epoch != 0) state.save(out.last_checkpoint);
  if (!std::filesystem::exists(out.best_checkpoint)) state.save(out.best_checkpoint);
  out.best_auc = state.best_auc;
  out.best_epoch = state.best_epoch;
  out.steps = state.step;
  return out;
}

}  // namespace end4
