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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "disfl/nn/parameters.hpp"

namespace disfl::nn {

struct GradCheckEntry {
  std::string parameter;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a − n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  // Check at most this many entries per parameter (0 = all), chosen by a
  // fixed stride so the selection is deterministic.
  std::size_t max_entries_per_param = 0;
};

// `loss` runs a full forward + backward pass: it must zero the store's
// gradients, accumulate fresh ones, and return the scalar loss. Analytic
// gradients from one call are compared with central differences on every
// trainable, finite parameter entry. Throws Error on a non-finite loss.
GradCheckReport gradient_check(ParameterStore& store, const std::function<double()>& loss,
                               const GradCheckOptions& opts = {});
GradCheckReport gradient_check(std::span<ParameterStore* const> stores,
                               const std::function<double()>& loss,
                               const GradCheckOptions& opts = {});

}  // namespace disfl::nn
