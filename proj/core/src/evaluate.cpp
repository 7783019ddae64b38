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

#include "end4/evaluate.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "end4/errors.hpp"
#include "end4/metrics.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

json GroupJson(const GroupMetrics& g) {
  json j = {{"name", g.name},
            {"count", g.count},
            {"positives", g.positives},
            {"negatives", g.count - g.positives},
            {"acc", g.acc ? json(*g.acc) : json(nullptr)},
            {"auc", g.auc ? json(*g.auc) : json(nullptr)}};
  if (!g.auc_error.empty()) j["auc_error"] = g.auc_error;
  return j;
}

GroupMetrics GroupFromJson(const json& j) {
  GroupMetrics g;
  g.name = j.at("name").get<std::string>();
  g.count = j.at("count").get<size_t>();
  g.positives = j.at("positives").get<size_t>();
  if (!j.at("acc").is_null()) g.acc = j.at("acc").get<double>();
  if (!j.at("auc").is_null()) g.auc = j.at("auc").get<double>();
  g.auc_error = j.value("auc_error", "");
  return g;
}

std::vector<double> ScoreSet(Scorer& scorer, const ImageSet& set,
                             const std::optional<Perturbation>& perturbation,
                             size_t batch_size) {
  std::vector<double> probs;
  probs.reserve(set.size());
  for (size_t begin = 0; begin < set.size(); begin += batch_size) {
    const size_t end = std::min(set.size(), begin + batch_size);
    std::vector<RgbImage> images;
    std::vector<std::string> ids;
    for (size_t i = begin; i < end; ++i) {
      images.push_back(perturbation ? apply_perturbation(set.image(i), *perturbation)
                                    : set.image(i));
      ids.push_back(set.record(i).id);
    }
    const auto p = scorer.score(images, ids);
    if (p.size() != images.size()) throw ShapeError("scorer returned wrong count");
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return probs;
}

}  // namespace

std::vector<double> DetectorScorer::score(const std::vector<RgbImage>& images,
                                          const std::vector<std::string>& ids) {
  const auto side = state_.model.denoiser.input_side;
  std::vector<torch::Tensor> tensors;
  for (const auto& image : images) {
    auto t = to_tensor(image);
    if (t.size(1) != side || t.size(2) != side) t = resize_tensor(t, side);
    tensors.push_back(t);
  }
  const auto p = score_images(state_, torch::stack(tensors), ids).contiguous();
  return std::vector<double>(p.data_ptr<double>(), p.data_ptr<double>() + p.numel());
}

GroupMetrics group_metrics(const std::string& name, const std::vector<int>& labels,
                           const std::vector<double>& probs) {
  GroupMetrics g;
  g.name = name;
  g.count = labels.size();
  for (int y : labels) g.positives += y == 1;
  if (labels.empty()) return g;
  g.acc = accuracy(labels, probs);
  try {
    g.auc = auc(labels, probs);
  } catch (const UndefinedMetricError& e) {
    g.auc_error = e.what();
  }
  return g;
}

EvalSection evaluate_section(Scorer& scorer, const ImageSet& set,
                             const std::optional<Perturbation>& perturbation,
                             size_t batch_size) {
  if (set.size() == 0) throw ConfigError("nothing to evaluate");
  const auto probs = ScoreSet(scorer, set, perturbation, batch_size);
  std::map<MaskSubset, std::pair<std::vector<int>, std::vector<double>>> groups;
  std::vector<int> labels;
  for (size_t i = 0; i < set.size(); ++i) {
    const auto& r = set.record(i);
    groups[r.subset].first.push_back(r.label);
    groups[r.subset].second.push_back(probs[i]);
    labels.push_back(r.label);
  }
  EvalSection section;
  if (perturbation) section.perturbation = perturbation->label();
  for (const auto& [subset, data] : groups) {
    section.subsets.push_back(group_metrics(to_string(subset), data.first, data.second));
  }
  section.overall = group_metrics("all", labels, probs);
  return section;
}

std::string EvalReport::to_json() const {
  json sections_json = json::array();
  for (const auto& s : sections) {
    json subsets = json::array();
    for (const auto& g : s.subsets) subsets.push_back(GroupJson(g));
    sections_json.push_back(
        {{"perturbation", s.perturbation}, {"subsets", subsets}, {"overall", GroupJson(s.overall)}});
  }
  return json{{"checkpoint_id", checkpoint_id},
              {"eval_t", eval_t},
              {"manifest", manifest},
              {"count", count},
              {"sections", sections_json}}
      .dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  EvalReport report;
  try {
    const auto j = json::parse(text);
    report.checkpoint_id = j.at("checkpoint_id").get<std::string>();
    report.eval_t = j.at("eval_t").get<std::string>();
    report.manifest = j.at("manifest").get<std::string>();
    report.count = j.at("count").get<size_t>();
    for (const auto& s : j.at("sections")) {
      EvalSection section;
      section.perturbation = s.at("perturbation").get<std::string>();
      for (const auto& g : s.at("subsets")) section.subsets.push_back(GroupFromJson(g));
      section.overall = GroupFromJson(s.at("overall"));
      report.sections.push_back(std::move(section));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed eval report: ") + e.what());
  }
  return report;
}

std::string checkpoint_id(const std::filesystem::path& checkpoint) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint", {checkpoint.string()});
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex = "sha256:";
  char byte[3];
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

EvalReport perturbation_sweep(const std::filesystem::path& checkpoint,
                              const std::filesystem::path& manifest,
                              const std::vector<Perturbation>& perturbations,
                              std::optional<Split> split) {
  auto state = TrainState::load(checkpoint);
  const auto set = ImageSet::load(manifest, split);
  DetectorScorer scorer(state);
  EvalReport report;
  report.checkpoint_id = checkpoint_id(checkpoint);
  report.eval_t = state.train.eval_t.describe();
  report.manifest = manifest.string();
  report.count = set.size();
  const auto batch = static_cast<size_t>(state.train.eval_batch_size);
  for (const auto& p : perturbations) {
    report.sections.push_back(evaluate_section(scorer, set, p, batch));
  }
  return report;
}

EvalReport evaluate(const std::filesystem::path& checkpoint,
                    const std::filesystem::path& manifest,
                    const std::optional<Perturbation>& perturbation,
                    std::optional<Split> split) {
  auto state = TrainState::load(checkpoint);
  const auto set = ImageSet::load(manifest, split);
  DetectorScorer scorer(state);
  EvalReport report;
  report.checkpoint_id = checkpoint_id(checkpoint);
  report.eval_t = state.train.eval_t.describe();
  report.manifest = manifest.string();
  report.count = set.size();
  report.sections.push_back(evaluate_section(
      scorer, set, perturbation, static_cast<size_t>(state.train.eval_batch_size)));
  return report;
}

FeatureTable export_features(TrainState& state, const ImageSet& set, size_t batch_size) {
  FeatureTable table;
  std::vector<torch::Tensor> chunks;
  const auto side = state.model.denoiser.input_side;
  for (size_t begin = 0; begin < set.size(); begin += batch_size) {
    const size_t end = std::min(set.size(), begin + batch_size);
    std::vector<std::string> ids;
    for (size_t i = begin; i < end; ++i) {
      ids.push_back(set.record(i).id);
      table.labels.push_back(set.record(i).label);
    }
    chunks.push_back(fused_features(state, stack_images(set, begin, end, side), ids));
    table.ids.insert(table.ids.end(), ids.begin(), ids.end());
  }
  table.features = chunks.empty() ? torch::empty({0, state.model.detector.fused_length()})
                                  : torch::cat(chunks);
  return table;
}

FeatureTable export_features(const std::filesystem::path& checkpoint,
                             const std::filesystem::path& manifest,
                             std::optional<Split> split) {
  auto state = TrainState::load(checkpoint);
  const auto set = ImageSet::load(manifest, split);
  return export_features(state, set, static_cast<size_t>(state.train.eval_batch_size));
}

std::string feature_table_csv(const FeatureTable& table) {
  std::ostringstream os;
  const auto f = table.features.to(torch::kFloat).contiguous();
  const int64_t dim = f.dim() == 2 ? f.size(1) : 0;
  os << "id,label";
  for (int64_t k = 0; k < dim; ++k) os << ",f" << k;
  os << "\n";
  const float* data = f.data_ptr<float>();
  char num[32];
  for (size_t i = 0; i < table.ids.size(); ++i) {
    os << table.ids[i] << "," << table.labels[i];
    for (int64_t k = 0; k < dim; ++k) {
      std::snprintf(num, sizeof(num), "%.9g", data[static_cast<int64_t>(i) * dim + k]);
      os << "," << num;
    }
    os << "\n";
  }
  return os.str();
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature table", {path.string()});
  out << feature_table_csv(table);
}

}  // namespace end4
