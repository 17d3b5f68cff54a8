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

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace disfl {

// BIO tags over reparandum (RM), repair (RP), and tokens that are both.
enum class Label : int { kO = 0, kBRm, kIRm, kBRp, kIRp, kBBoth, kIBoth };

inline constexpr int kNumLabels = 7;

std::string_view label_name(Label l);
// Throws Error for an unknown name.
Label parse_label(std::string_view name);

bool is_reparandum(Label l);
bool is_inside(Label l);

// I-x may only follow B-x or I-x, and a sequence may not start with I-x.
bool transition_legal(Label prev, Label next);
bool start_legal(Label l);
bool bio_consistent(std::span<const Label> labels);
// Rewrites every illegal I-x as B-x.
void repair_bio(std::vector<Label>& labels);

std::vector<bool> reparandum_mask(std::span<const Label> labels);

inline std::array<Label, kNumLabels> all_labels() {
  return {Label::kO, Label::kBRm, Label::kIRm, Label::kBRp, Label::kIRp, Label::kBBoth, Label::kIBoth};
}

}  // namespace disfl
