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

#include "end4/errors.hpp"

#include <utility>

namespace end4 {
namespace {

std::string JoinItems(const std::string& what,
                      const std::vector<std::string>& items) {
  if (items.empty()) return what;
  std::string out = what + ":";
  constexpr size_t kMaxListed = 20;
  for (size_t i = 0; i < items.size() && i < kMaxListed; ++i) {
    out += (i == 0 ? " " : ", ") + items[i];
  }
  if (items.size() > kMaxListed) {
    out += " (+" + std::to_string(items.size() - kMaxListed) + " more)";
  }
  return out;
}

}  // namespace

DataError::DataError(const std::string& what, std::vector<std::string> items)
    : Error(JoinItems(what, items)), items_(std::move(items)) {}

ValidationError::ValidationError(const std::string& what,
                                 std::vector<std::string> ids)
    : Error(JoinItems(what, ids)), ids_(std::move(ids)) {}

}  // namespace end4
