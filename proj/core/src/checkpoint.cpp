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

#include "end4/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "end4/errors.hpp"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic{'E', 'N', 'D', '4', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

std::string DtypeName(torch::Dtype dtype) {
  switch (dtype) {
    case torch::kFloat:
      return "float32";
    case torch::kDouble:
      return "float64";
    case torch::kLong:
      return "int64";
    case torch::kInt:
      return "int32";
    case torch::kUInt8:
      return "uint8";
    default:
      throw ParameterError("unsupported checkpoint dtype");
  }
}

torch::Dtype DtypeFromName(const std::string& name) {
  if (name == "float32") return torch::kFloat;
  if (name == "float64") return torch::kDouble;
  if (name == "int64") return torch::kLong;
  if (name == "int32") return torch::kInt;
  if (name == "uint8") return torch::kUInt8;
  throw DataError("unknown dtype in checkpoint: " + name);
}

template <typename T>
void AppendLittleEndian(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T ReadLittleEndian(const std::string& in, size_t offset) {
  if (offset + sizeof(T) > in.size()) throw DataError("truncated checkpoint");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<uint64_t>(static_cast<uint8_t>(in[offset + i])) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

void Checkpoint::add(const std::string& name, const torch::Tensor& tensor) {
  if (contains(name)) throw ParameterError("duplicate checkpoint entry " + name);
  tensors.emplace_back(name, tensor.detach().cpu().contiguous().clone());
}

const torch::Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("checkpoint entry missing", {name});
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& entry : tensors) {
    if (entry.first == name) return true;
  }
  return false;
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  json header;
  header["metadata"] = json::parse(checkpoint.metadata_json);
  header["tensors"] = json::array();
  uint64_t offset = 0;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    const auto nbytes = static_cast<uint64_t>(tensor.numel() * tensor.element_size());
    header["tensors"].push_back({{"name", name},
                                 {"dtype", DtypeName(tensor.scalar_type())},
                                 {"shape", tensor.sizes().vec()},
                                 {"offset", offset},
                                 {"nbytes", nbytes}});
    offset += nbytes;
  }
  const std::string header_text = header.dump();

  std::string out(kMagic.begin(), kMagic.end());
  AppendLittleEndian<uint32_t>(out, kVersion);
  AppendLittleEndian<uint64_t>(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& entry : checkpoint.tensors) {
    const auto t = entry.second.contiguous();
    out.append(static_cast<const char*>(t.data_ptr()),
               static_cast<size_t>(t.numel() * t.element_size()));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagic.size() + 12 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw DataError("not an END4 checkpoint");
  }
  const auto version = ReadLittleEndian<uint32_t>(bytes, 8);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = ReadLittleEndian<uint64_t>(bytes, 12);
  const size_t header_start = 20;
  if (header_start + header_len > bytes.size()) throw DataError("truncated checkpoint");
  json header;
  try {
    header = json::parse(bytes.substr(header_start, header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const size_t payload = header_start + header_len;

  Checkpoint ckpt;
  ckpt.metadata_json = header.at("metadata").dump();
  for (const auto& entry : header.at("tensors")) {
    const auto dtype = DtypeFromName(entry.at("dtype").get<std::string>());
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    const auto offset = entry.at("offset").get<uint64_t>();
    const auto nbytes = entry.at("nbytes").get<uint64_t>();
    auto tensor = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (static_cast<uint64_t>(tensor.numel() * tensor.element_size()) != nbytes ||
        payload + offset + nbytes > bytes.size()) {
      throw DataError("checkpoint entry has inconsistent size",
                      {entry.at("name").get<std::string>()});
    }
    std::memcpy(tensor.data_ptr(), bytes.data() + payload + offset, nbytes);
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), tensor);
  }
  return ckpt;
}

void write_checkpoint(const Checkpoint& checkpoint,
                      const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint", {path.string()});
    const auto bytes = encode_checkpoint(checkpoint);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short checkpoint write", {path.string()});
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found", {path.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

void add_module_tensors(Checkpoint& checkpoint, const std::string& prefix,
                        const torch::nn::Module& module) {
  for (const auto& item : module.named_parameters()) {
    checkpoint.add(prefix + item.key(), item.value());
  }
  for (const auto& item : module.named_buffers()) {
    checkpoint.add(prefix + item.key(), item.value());
  }
}

void load_module_tensors(const Checkpoint& checkpoint, const std::string& prefix,
                         torch::nn::Module& module) {
  torch::NoGradGuard guard;
  auto copy_into = [&](const std::string& key, torch::Tensor& target) {
    const auto& stored = checkpoint.get(prefix + key);
    if (stored.sizes() != target.sizes()) {
      throw DataError("checkpoint shape mismatch", {prefix + key});
    }
    target.copy_(stored.to(target.scalar_type()));
  };
  for (auto& item : module.named_parameters()) copy_into(item.key(), item.value());
  for (auto& item : module.named_buffers()) copy_into(item.key(), item.value());
}

}  // namespace end4
