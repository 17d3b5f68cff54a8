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

#include "disfl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "disfl/error.hpp"

namespace disfl::nn {

GradCheckReport gradient_check(std::span<ParameterStore* const> stores,
                               const std::function<double()>& loss,
                               const GradCheckOptions& opts) {
  const double base = loss();
  if (!std::isfinite(base)) throw Error("gradient_check: non-finite loss");
  std::vector<std::vector<Matrix>> analytic(stores.size());
  for (std::size_t s = 0; s < stores.size(); ++s) {
    for (std::size_t i = 0; i < stores[s]->size(); ++i) analytic[s].push_back(stores[s]->at(i).grad);
  }

  GradCheckReport report;
  for (std::size_t s = 0; s < stores.size(); ++s) {
    ParameterStore& store = *stores[s];
    for (std::size_t i = 0; i < store.size(); ++i) {
      Parameter& p = store.at(i);
      if (p.frozen) continue;
      GradCheckEntry entry;
      entry.parameter = p.name;
      auto& values = p.value.data();
      std::size_t stride = 1;
      if (opts.max_entries_per_param > 0 && values.size() > opts.max_entries_per_param) {
        stride = (values.size() + opts.max_entries_per_param - 1) / opts.max_entries_per_param;
      }
      for (std::size_t k = 0; k < values.size(); k += stride) {
        if (!std::isfinite(values[k])) continue;
        const double saved = values[k];
        values[k] = saved + opts.step;
        const double up = loss();
        values[k] = saved - opts.step;
        const double down = loss();
        values[k] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
          throw Error("gradient_check: non-finite loss perturbing '" + p.name + "'");
        }
        const double numeric = (up - down) / (2.0 * opts.step);
        const double a = analytic[s][i].data()[k];
        const double abs_err = std::abs(a - numeric);
        const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
        entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
        entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
        ++entry.checked;
      }
      report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
      report.entries.push_back(std::move(entry));
    }
  }
  // Leave the stores holding the analytic gradients of the unperturbed point.
  for (std::size_t s = 0; s < stores.size(); ++s) {
    for (std::size_t i = 0; i < stores[s]->size(); ++i) stores[s]->at(i).grad = analytic[s][i];
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

GradCheckReport gradient_check(ParameterStore& store, const std::function<double()>& loss,
                               const GradCheckOptions& opts) {
  ParameterStore* one[] = {&store};
  return gradient_check(one, loss, opts);
}

}  // namespace disfl::nn
