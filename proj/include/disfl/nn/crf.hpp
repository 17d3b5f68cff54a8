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
#include <string>
#include <vector>

#include "disfl/nn/matrix.hpp"
#include "disfl/nn/parameters.hpp"
#include "disfl/nn/tape.hpp"

namespace disfl::nn {

// Linear-chain CRF scores. transitions(i, j) scores label i followed by label
// j; -inf marks a forbidden transition (likewise for start/stop).
struct CrfScores {
  Matrix transitions;        // L x L
  std::vector<double> start;  // L
  std::vector<double> stop;   // L

  std::size_t labels() const { return start.size(); }
};

// Score of one label path: start + emissions + transitions + stop.
double crf_path_score(const Matrix& emissions, const CrfScores& s, std::span<const int> path);

// log Σ_paths exp(score) by the forward recursion. Requires T >= 1.
double crf_log_partition(const Matrix& emissions, const CrfScores& s);

// argmax path; ties resolve to the lowest label index at every step.
std::vector<int> crf_viterbi(const Matrix& emissions, const CrfScores& s);

// log_partition − score(gold). Throws ShapeError for labels out of range.
double crf_nll(const Matrix& emissions, const CrfScores& s, std::span<const int> gold);

// Trainable CRF parameters. `legal` (L x L, 1 = allowed) is fixed at
// construction; forbidden entries hold -inf and never receive gradient.
struct CrfParams {
  Parameter* transitions = nullptr;  // L x L
  Parameter* start = nullptr;        // 1 x L
  Parameter* stop = nullptr;         // 1 x L

  std::size_t labels() const { return start->value.cols(); }
  CrfScores scores() const;
};

CrfParams add_crf(ParameterStore& store, const std::string& prefix, const Matrix& legal_transitions,
                  std::span<const bool> legal_start);
CrfParams find_crf(ParameterStore& store, const std::string& prefix);

// Differentiable CRF negative log-likelihood (1x1).
Var crf_nll(Tape& t, Var emissions, const CrfParams& p, std::span<const int> gold);

}  // namespace disfl::nn
