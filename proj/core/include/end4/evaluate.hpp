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

#ifndef END4_EVALUATE_HPP_
#define END4_EVALUATE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "end4/image.hpp"
#include "end4/manifest.hpp"
#include "end4/perturb.hpp"
#include "end4/trainer.hpp"

namespace end4 {

// Maps images to "inpainted" probabilities.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(const std::vector<RgbImage>& images,
                                    const std::vector<std::string>& ids) = 0;
};

class DetectorScorer : public Scorer {
 public:
  explicit DetectorScorer(TrainState& state) : state_(state) {}
  std::vector<double> score(const std::vector<RgbImage>& images,
                            const std::vector<std::string>& ids) override;

 private:
  TrainState& state_;
};

struct GroupMetrics {
  std::string name;
  size_t count = 0;
  size_t positives = 0;
  std::optional<double> acc;
  std::optional<double> auc;
  // Set when auc is undefined (single-class group).
  std::string auc_error;
};

struct EvalSection {
  std::string perturbation = "none";
  std::vector<GroupMetrics> subsets;
  GroupMetrics overall;
};

struct EvalReport {
  std::string checkpoint_id;
  std::string eval_t;
  std::string manifest;
  size_t count = 0;
  std::vector<EvalSection> sections;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

// Metrics for one group of labels and probabilities.
GroupMetrics group_metrics(const std::string& name, const std::vector<int>& labels,
                           const std::vector<double>& probs);

// Scores every image of `set` (after the optional perturbation) and reports
// per-subset and pooled metrics.
EvalSection evaluate_section(Scorer& scorer, const ImageSet& set,
                             const std::optional<Perturbation>& perturbation,
                             size_t batch_size = 50);

// "sha256:" followed by the first 16 hex digits of the file digest.
std::string checkpoint_id(const std::filesystem::path& checkpoint);

EvalReport evaluate(const std::filesystem::path& checkpoint,
                    const std::filesystem::path& manifest,
                    const std::optional<Perturbation>& perturbation = std::nullopt,
                    std::optional<Split> split = Split::kTest);

// One section per perturbation.
EvalReport perturbation_sweep(const std::filesystem::path& checkpoint,
                              const std::filesystem::path& manifest,
                              const std::vector<Perturbation>& perturbations,
                              std::optional<Split> split = Split::kTest);

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<int> labels;
  torch::Tensor features;  // [N, fused_length]
};

FeatureTable export_features(TrainState& state, const ImageSet& set,
                             size_t batch_size = 50);
FeatureTable export_features(const std::filesystem::path& checkpoint,
                             const std::filesystem::path& manifest,
                             std::optional<Split> split = std::nullopt);

// Header "id,label,f0,...,f{D-1}" then one row per image.
std::string feature_table_csv(const FeatureTable& table);
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);

}  // namespace end4

#endif  // END4_EVALUATE_HPP_
