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

#include "disfl/nn/optim.hpp"

#include <cmath>

#include "disfl/error.hpp"

namespace disfl::nn {

namespace {

void update(ParameterStore& store, const AdamConfig& cfg, double factor) {
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    if (p.frozen) continue;
    auto& w = p.value.data();
    auto& m = p.adam_m.data();
    auto& v = p.adam_v.data();
    const auto& g = p.grad.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k] * factor;
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  store.zero_grad();
}

}  // namespace

void adam_step(std::span<ParameterStore* const> stores, const AdamConfig& cfg) {
  double norm2 = 0.0;
  for (const ParameterStore* store : stores) {
    for (std::size_t i = 0; i < store->size(); ++i) {
      const Parameter& p = store->at(i);
      if (p.frozen) continue;
      for (double g : p.grad.data()) {
        if (!std::isfinite(g)) throw Error("non-finite gradient in parameter '" + p.name + "'");
        norm2 += g * g;
      }
    }
  }
  double factor = 1.0;
  if (cfg.clip_norm > 0.0) {
    const double norm = std::sqrt(norm2);
    if (norm > cfg.clip_norm) factor = cfg.clip_norm / norm;
  }
  for (ParameterStore* store : stores) update(*store, cfg, factor);
}

void adam_step(ParameterStore& store, const AdamConfig& cfg) {
  ParameterStore* one[] = {&store};
  adam_step(one, cfg);
}

}  // namespace disfl::nn
