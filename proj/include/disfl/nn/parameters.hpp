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

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "disfl/nn/matrix.hpp"

namespace disfl::nn {

using Rng = std::mt19937_64;

// A named trainable array. Gradients accumulate into `grad` during backward;
// the optimizer consumes and clears them.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  // Frozen parameters receive no gradient and are skipped by the optimizer.
  bool frozen = false;
};

// Named parameter arrays in insertion order. Parameter addresses are stable
// for the lifetime of the store, so modules may hold references.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Throws ConfigError on a duplicate name.
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }

  void zero_grad();
  void set_frozen(bool frozen);
  std::size_t scalar_count() const;

  // Value snapshots for early stopping.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

  // Optimizer step counter (Adam bias correction).
  std::uint64_t step = 0;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for matrices.
void init_uniform_fan_in(Parameter& p, Rng& rng);
void init_uniform(Parameter& p, double bound, Rng& rng);

}  // namespace disfl::nn
