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

#include "disfl/labels.hpp"

#include <string>

#include "disfl/error.hpp"

namespace disfl {

namespace {

constexpr std::array<std::string_view, kNumLabels> kNames = {"O",    "B-RM",   "I-RM",  "B-RP",
                                                             "I-RP", "B-BOTH", "I-BOTH"};

// Category shared by B-x and I-x: 0 = O, 1 = RM, 2 = RP, 3 = BOTH.
int category(Label l) { return (static_cast<int>(l) + 1) / 2; }

Label begin_of(int cat) { return static_cast<Label>(2 * cat - 1); }

}  // namespace

std::string_view label_name(Label l) { return kNames[static_cast<std::size_t>(l)]; }

Label parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Label>(i);
  }
  throw Error("unknown label '" + std::string(name) + "'");
}

bool is_reparandum(Label l) {
  return l == Label::kBRm || l == Label::kIRm || l == Label::kBBoth || l == Label::kIBoth;
}

bool is_inside(Label l) { return l == Label::kIRm || l == Label::kIRp || l == Label::kIBoth; }

bool transition_legal(Label prev, Label next) {
  if (!is_inside(next)) return true;
  return category(prev) == category(next);
}

bool start_legal(Label l) { return !is_inside(l); }

bool bio_consistent(std::span<const Label> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i == 0 ? !start_legal(labels[i]) : !transition_legal(labels[i - 1], labels[i])) return false;
  }
  return true;
}

void repair_bio(std::vector<Label>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool ok = i == 0 ? start_legal(labels[i]) : transition_legal(labels[i - 1], labels[i]);
    if (!ok) labels[i] = begin_of(category(labels[i]));
  }
}

std::vector<bool> reparandum_mask(std::span<const Label> labels) {
  std::vector<bool> m(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = is_reparandum(labels[i]);
  return m;
}

}  // namespace disfl
