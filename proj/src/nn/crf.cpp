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

#include "disfl/nn/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "disfl/error.hpp"

namespace disfl::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_emissions(const Matrix& e, const CrfScores& s) {
  if (e.rows() == 0) throw ShapeError("crf: empty sequence");
  if (e.cols() != s.labels()) {
    throw ShapeError("crf: emissions have " + std::to_string(e.cols()) + " labels, CRF has " +
                     std::to_string(s.labels()));
  }
}

void check_path(std::span<const int> path, const Matrix& e) {
  if (path.size() != e.rows()) throw ShapeError("crf: path length does not match emissions");
  for (int y : path) {
    if (y < 0 || static_cast<std::size_t>(y) >= e.cols()) {
      throw ShapeError("crf: label index " + std::to_string(y) + " out of range");
    }
  }
}

// alpha(t, j) = log Σ over prefixes ending in j at t.
Matrix forward(const Matrix& e, const CrfScores& s) {
  const std::size_t T = e.rows(), L = s.labels();
  Matrix alpha(T, L, kNegInf);
  for (std::size_t j = 0; j < L; ++j) alpha(0, j) = s.start[j] + e(0, j);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      double acc = kNegInf;
      for (std::size_t i = 0; i < L; ++i) acc = log_add(acc, alpha(t - 1, i) + s.transitions(i, j));
      alpha(t, j) = acc + e(t, j);
    }
  }
  return alpha;
}

// beta(t, i) = log Σ over suffixes after being in i at t (excluding e(t, i)).
Matrix backward(const Matrix& e, const CrfScores& s) {
  const std::size_t T = e.rows(), L = s.labels();
  Matrix beta(T, L, kNegInf);
  for (std::size_t i = 0; i < L; ++i) beta(T - 1, i) = s.stop[i];
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < L; ++i) {
      double acc = kNegInf;
      for (std::size_t j = 0; j < L; ++j) {
        acc = log_add(acc, s.transitions(i, j) + e(t + 1, j) + beta(t + 1, j));
      }
      beta(t, i) = acc;
    }
  }
  return beta;
}

double log_partition_from(const Matrix& alpha, const CrfScores& s) {
  const std::size_t T = alpha.rows();
  double z = kNegInf;
  for (std::size_t j = 0; j < s.labels(); ++j) z = log_add(z, alpha(T - 1, j) + s.stop[j]);
  return z;
}

}  // namespace

double crf_path_score(const Matrix& emissions, const CrfScores& s, std::span<const int> path) {
  check_emissions(emissions, s);
  check_path(path, emissions);
  double score = s.start[static_cast<std::size_t>(path[0])] + s.stop[static_cast<std::size_t>(path.back())];
  for (std::size_t t = 0; t < path.size(); ++t) {
    score += emissions(t, static_cast<std::size_t>(path[t]));
    if (t > 0) score += s.transitions(static_cast<std::size_t>(path[t - 1]), static_cast<std::size_t>(path[t]));
  }
  return score;
}

double crf_log_partition(const Matrix& emissions, const CrfScores& s) {
  check_emissions(emissions, s);
  return log_partition_from(forward(emissions, s), s);
}

std::vector<int> crf_viterbi(const Matrix& emissions, const CrfScores& s) {
  check_emissions(emissions, s);
  const std::size_t T = emissions.rows(), L = s.labels();
  Matrix score(T, L, kNegInf);
  std::vector<int> back(T * L, 0);
  for (std::size_t j = 0; j < L; ++j) score(0, j) = s.start[j] + emissions(0, j);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (std::size_t i = 0; i < L; ++i) {
        const double v = score(t - 1, i) + s.transitions(i, j);
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      score(t, j) = best + emissions(t, j);
      back[t * L + j] = arg;
    }
  }
  double best = kNegInf;
  int last = 0;
  for (std::size_t j = 0; j < L; ++j) {
    const double v = score(T - 1, j) + s.stop[j];
    if (v > best) {
      best = v;
      last = static_cast<int>(j);
    }
  }
  std::vector<int> path(T);
  path[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) {
    path[t - 1] = back[t * L + static_cast<std::size_t>(path[t])];
  }
  return path;
}

double crf_nll(const Matrix& emissions, const CrfScores& s, std::span<const int> gold) {
  check_emissions(emissions, s);
  check_path(gold, emissions);
  return crf_log_partition(emissions, s) - crf_path_score(emissions, s, gold);
}

CrfScores CrfParams::scores() const {
  CrfScores s;
  s.transitions = transitions->value;
  s.start = start->value.data();
  s.stop = stop->value.data();
  return s;
}

CrfParams add_crf(ParameterStore& store, const std::string& prefix, const Matrix& legal_transitions,
                  std::span<const bool> legal_start) {
  const std::size_t L = legal_start.size();
  if (legal_transitions.rows() != L || legal_transitions.cols() != L) {
    throw ShapeError("add_crf: legality mask shape mismatch");
  }
  CrfParams p;
  p.transitions = &store.add(prefix + ".transitions", L, L);
  p.start = &store.add(prefix + ".start", 1, L);
  p.stop = &store.add(prefix + ".stop", 1, L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      if (legal_transitions(i, j) == 0.0) p.transitions->value(i, j) = kNegInf;
    }
    if (!legal_start[i]) p.start->value(0, i) = kNegInf;
  }
  return p;
}

CrfParams find_crf(ParameterStore& store, const std::string& prefix) {
  CrfParams p;
  p.transitions = &store.get(prefix + ".transitions");
  p.start = &store.get(prefix + ".start");
  p.stop = &store.get(prefix + ".stop");
  return p;
}

Var crf_nll(Tape& t, Var emissions, const CrfParams& p, std::span<const int> gold) {
  const Matrix& e = t.value(emissions);
  const CrfScores s = p.scores();
  check_emissions(e, s);
  check_path(gold, e);
  Matrix alpha = forward(e, s);
  const double log_z = log_partition_from(alpha, s);
  const double value = log_z - crf_path_score(e, s, gold);
  std::vector<int> path(gold.begin(), gold.end());
  const bool rg = t.requires_grad(emissions) || !p.transitions->frozen || !p.start->frozen ||
                  !p.stop->frozen;
  return t.push(Matrix(1, 1, value), rg,
                [emissions, p, path, alpha = std::move(alpha), log_z](Tape& tp, std::size_t self) {
                  const double g = tp.node(self).grad(0, 0);
                  const Matrix& em = tp.value(emissions);
                  const CrfScores sc = p.scores();
                  const Matrix beta = backward(em, sc);
                  const std::size_t T = em.rows(), L = sc.labels();
                  const bool de = tp.requires_grad(emissions);
                  // Expected counts minus gold counts.
                  for (std::size_t t2 = 0; t2 < T; ++t2) {
                    for (std::size_t j = 0; j < L; ++j) {
                      const double m = std::exp(alpha(t2, j) + beta(t2, j) - log_z);
                      if (de) tp.grad(emissions)(t2, j) += g * m;
                      if (t2 == 0 && !p.start->frozen && std::isfinite(sc.start[j])) {
                        p.start->grad(0, j) += g * m;
                      }
                      if (t2 == T - 1 && !p.stop->frozen && std::isfinite(sc.stop[j])) {
                        p.stop->grad(0, j) += g * m;
                      }
                    }
                    if (t2 + 1 < T && !p.transitions->frozen) {
                      for (std::size_t i = 0; i < L; ++i) {
                        if (alpha(t2, i) == kNegInf) continue;
                        for (std::size_t j = 0; j < L; ++j) {
                          if (!std::isfinite(sc.transitions(i, j))) continue;
                          const double m = std::exp(alpha(t2, i) + sc.transitions(i, j) +
                                                    em(t2 + 1, j) + beta(t2 + 1, j) - log_z);
                          p.transitions->grad(i, j) += g * m;
                        }
                      }
                    }
                  }
                  const auto gi = [&](std::size_t t2) { return static_cast<std::size_t>(path[t2]); };
                  for (std::size_t t2 = 0; t2 < T; ++t2) {
                    if (de) tp.grad(emissions)(t2, gi(t2)) -= g;
                    if (t2 > 0 && !p.transitions->frozen) p.transitions->grad(gi(t2 - 1), gi(t2)) -= g;
                  }
                  if (!p.start->frozen) p.start->grad(0, gi(0)) -= g;
                  if (!p.stop->frozen) p.stop->grad(0, gi(T - 1)) -= g;
                });
}

}  // namespace disfl::nn
