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

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "disfl/nn/matrix.hpp"
#include "disfl/nn/parameters.hpp"

namespace disfl::nn {

// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const { return id != kNone; }
};

// Reverse-mode tape. Nodes are recorded in evaluation order; backward() walks
// them in reverse. Parameters are not nodes: ops that read a Parameter
// accumulate its gradient directly into Parameter::grad.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Tape() = default;
  explicit Tape(bool training, Rng* rng = nullptr) : training_(training), rng_(rng) {}

  Var push(Matrix value, bool requires_grad, Backward backward);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  Matrix& grad(Var v) { return nodes_[v.id].grad; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  Node& node(std::size_t id) { return nodes_[id]; }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node and propagates.
  void backward(Var loss);

  bool training() const { return training_; }
  Rng* rng() const { return rng_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  bool training_ = false;
  Rng* rng_ = nullptr;
};

enum class Activation { kIdentity, kTanh, kSigmoid, kSoftplus };

// ln(1 + e^x), computed as x + ln(1 + e^-x) for x > 20.
double softplus(double x);
double sigmoid(double x);
double activate(Activation a, double x);
// Derivative expressed through the input x.
double activation_grad(Activation a, double x);

// ½ ln(2π σ²) + (x − μ)² / (2σ²). Throws std::domain_error for σ² ≤ 0.
double gaussian_nll(double x, double mu, double var);

struct LstmParams {
  Parameter* w = nullptr;  // 4H x D, gate order i, f, g, o
  Parameter* u = nullptr;  // 4H x H
  Parameter* b = nullptr;  // 1 x 4H
  std::size_t input = 0;
  std::size_t hidden = 0;
};

struct BiLstmParams {
  LstmParams fwd;
  LstmParams bwd;
  std::size_t hidden() const { return fwd.hidden; }
};

// Uniform ±1/√fan_in weights, zero biases, forget-gate bias +1.
LstmParams add_lstm(ParameterStore& store, const std::string& prefix, std::size_t input,
                    std::size_t hidden, Rng& rng);
BiLstmParams add_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input,
                        std::size_t hidden, Rng& rng);
LstmParams find_lstm(ParameterStore& store, const std::string& prefix);
BiLstmParams find_bilstm(ParameterStore& store, const std::string& prefix);

// ---- ops -----------------------------------------------------------------

Var constant(Tape& t, Matrix value);
// Rows of `table` selected by `ids`.
Var embed(Tape& t, Parameter& table, std::span<const int> ids);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var gather_rows(Tape& t, Var x, std::span<const std::size_t> rows);
// x W^T + b; W is out x in, b is 1 x out (optional).
Var linear(Tape& t, Var x, Parameter& w, Parameter* b);
Var activate(Tape& t, Var x, Activation a);
Var activate_columns(Tape& t, Var x, std::span<const Activation> per_column);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double factor);
// alpha * a + (1 - alpha) * b
Var mix(Tape& t, Var a, Var b, double alpha);
// Inverted dropout; identity unless the tape is in training mode.
Var dropout(Tape& t, Var x, double p);
// One direction over all rows of x. Output row r is the state after reading
// row r (for reverse, after reading rows T-1 .. r).
Var lstm(Tape& t, Var x, const LstmParams& p, bool reverse);
// [forward | backward] states, 2H columns.
Var bilstm(Tape& t, Var x, const BiLstmParams& p);
// Sum over all entries of the Gaussian NLL; rows with row_mask[r] == false
// are ignored. Empty mask means all rows.
Var gaussian_nll(Tape& t, Var mu, Var var, const Matrix& target,
                 const std::vector<bool>& row_mask = {});
// (target − μ) / √σ²
Var zscore(Tape& t, Var mu, Var var, const Matrix& target);

void check_shape(bool ok, const char* op, const Matrix& a, const Matrix& b);

}  // namespace disfl::nn
