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

#ifndef END4_CHECKPOINT_HPP_
#define END4_CHECKPOINT_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace end4 {

// Self-describing weight container.
//
// Layout (all integers little-endian):
//   8 bytes   magic "END4CKPT"
//   u32       format version (1)
//   u64       header length N
//   N bytes   UTF-8 JSON header:
//               {"metadata": <object>,
//                "tensors": [{"name", "dtype", "shape", "offset", "nbytes"}]}
//   payload   raw contiguous tensor bytes; offsets are relative to the
//             payload start
//
// Tensors keep insertion order; reading reproduces values bit-for-bit.
struct Checkpoint {
  std::string metadata_json = "{}";
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  void add(const std::string& name, const torch::Tensor& tensor);
  // Throws DataError when absent.
  const torch::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_checkpoint(const Checkpoint& checkpoint,
                      const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Adds every parameter and buffer of `module` under `prefix`.
void add_module_tensors(Checkpoint& checkpoint, const std::string& prefix,
                        const torch::nn::Module& module);
// Copies stored tensors into `module`; every parameter and buffer must be
// present with a matching shape.
void load_module_tensors(const Checkpoint& checkpoint, const std::string& prefix,
                         torch::nn::Module& module);

}  // namespace end4

#endif  // END4_CHECKPOINT_HPP_
