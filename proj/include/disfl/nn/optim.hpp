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

#include <span>

#include "disfl/nn/parameters.hpp"

namespace disfl::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global-norm clipping threshold; 0 disables.
  double clip_norm = 5.0;
};

// One bias-corrected Adam update from the gradients accumulated in the store,
// then clears them. Frozen parameters are skipped. Throws Error naming the
// parameter when a gradient entry is not finite.
void adam_step(ParameterStore& store, const AdamConfig& cfg);
// Joint update over several stores; clipping uses the norm across all of them.
void adam_step(std::span<ParameterStore* const> stores, const AdamConfig& cfg);

}  // namespace disfl::nn
