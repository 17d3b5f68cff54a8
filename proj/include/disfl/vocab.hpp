// Copyright 2026 The disfl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace disfl {

// String <-> index map; index 0 is reserved for unknown items.
class Vocabulary {
 public:
  Vocabulary() : items_{"<unk>"} { index_.emplace("<unk>", 0); }
  explicit Vocabulary(std::vector<std::string> items) : Vocabulary() {
    for (auto& s : items) {
      if (s != "<unk>") add(s);
    }
  }

  int add(const std::string& s) {
    auto [it, inserted] = index_.emplace(s, static_cast<int>(items_.size()));
    if (inserted) items_.push_back(s);
    return it->second;
  }
  int index(const std::string& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? 0 : it->second;
  }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace disfl
