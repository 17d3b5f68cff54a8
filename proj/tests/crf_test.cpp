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

#include <cmath>
#include <limits>
#include <random>

#include "disfl/error.hpp"
#include "disfl/labels.hpp"
#include "disfl/nn/crf.hpp"
#include "disfl/nn/gradcheck.hpp"
#include "doctest.h"

using namespace disfl;
using namespace disfl::nn;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Independent oracle: enumerate every label path.
struct Enumerated {
  double log_z;
  std::vector<int> best;
  double best_score;
};

Enumerated enumerate(const Matrix& em, const CrfScores& s) {
  const std::size_t T = em.rows(), L = em.cols();
  std::vector<int> path(T, 0);
  std::vector<double> scores;
  Enumerated out{0.0, {}, kNegInf};
  while (true) {
    double score = s.start[static_cast<std::size_t>(path[0])] + em(0, static_cast<std::size_t>(path[0]));
    for (std::size_t t = 1; t < T; ++t) {
      score += s.transitions(static_cast<std::size_t>(path[t - 1]), static_cast<std::size_t>(path[t])) +
               em(t, static_cast<std::size_t>(path[t]));
    }
    score += s.stop[static_cast<std::size_t>(path[T - 1])];
    scores.push_back(score);
    if (score > out.best_score) {  // first (lexicographically smallest) path wins ties
      out.best_score = score;
      out.best = path;
    }
    int t = static_cast<int>(T) - 1;
    while (t >= 0) {
      if (static_cast<std::size_t>(++path[static_cast<std::size_t>(t)]) < L) break;
      path[static_cast<std::size_t>(t)] = 0;
      --t;
    }
    if (t < 0) break;
  }
  double m = kNegInf;
  for (double x : scores) m = std::max(m, x);
  double acc = 0;
  for (double x : scores) acc += std::exp(x - m);
  out.log_z = m + std::log(acc);
  return out;
}

CrfScores random_scores(std::mt19937_64& rng, std::size_t L, bool mask) {
  std::normal_distribution<double> d;
  CrfScores s{Matrix(L, L), std::vector<double>(L), std::vector<double>(L)};
  for (auto& x : s.transitions.flat()) x = d(rng);
  for (auto& x : s.start) x = d(rng);
  for (auto& x : s.stop) x = d(rng);
  if (mask && L == static_cast<std::size_t>(kNumLabels)) {
    const auto labels = all_labels();
    for (std::size_t i = 0; i < L; ++i) {
      if (!start_legal(labels[i])) s.start[i] = kNegInf;
      for (std::size_t j = 0; j < L; ++j) {
        if (!transition_legal(labels[i], labels[j])) s.transitions(i, j) = kNegInf;
      }
    }
  }
  return s;
}

Matrix random_emissions(std::mt19937_64& rng, std::size_t T, std::size_t L) {
  std::normal_distribution<double> d(0.0, 2.0);
  Matrix m(T, L);
  for (auto& x : m.flat()) x = d(rng);
  return m;
}

}  // namespace

TEST_CASE("all-zero scores, T=2, L=2 gives ln 4") {
  CrfScores s{Matrix(2, 2), {0, 0}, {0, 0}};
  CHECK(crf_log_partition(Matrix(2, 2), s) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("single label degenerates to the path score") {
  CrfScores s{Matrix(1, 1, 0.5), {0.25}, {-1.0}};
  Matrix em(3, 1);
  em(0, 0) = 1;
  em(1, 0) = 2;
  em(2, 0) = 3;
  CHECK(crf_log_partition(em, s) == doctest::Approx(0.25 + 6 + 1.0 - 1.0).epsilon(1e-14));
  CHECK(crf_viterbi(em, s) == std::vector<int>{0, 0, 0});
}

TEST_CASE("forward recursion and Viterbi match exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t T = 1 + static_cast<std::size_t>(trial % 4);
    const std::size_t L = 2 + static_cast<std::size_t>(trial % 3);
    const auto s = random_scores(rng, L, false);
    const auto em = random_emissions(rng, T, L);
    const auto oracle = enumerate(em, s);
    CHECK(std::abs(crf_log_partition(em, s) - oracle.log_z) < 1e-10);
    CHECK(crf_viterbi(em, s) == oracle.best);
  }
  // The documented 4x3 instance: 81 paths.
  const auto s = random_scores(rng, 3, false);
  const auto em = random_emissions(rng, 4, 3);
  const auto oracle = enumerate(em, s);
  CHECK(std::abs(crf_log_partition(em, s) - oracle.log_z) < 1e-10);
  CHECK(crf_viterbi(em, s) == oracle.best);
}

TEST_CASE("masked 7-label CRF: oracle agreement and legal paths") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t T = 1 + static_cast<std::size_t>(trial % 4);
    const auto s = random_scores(rng, kNumLabels, true);
    const auto em = random_emissions(rng, T, kNumLabels);
    const auto oracle = enumerate(em, s);
    CHECK(std::abs(crf_log_partition(em, s) - oracle.log_z) < 1e-10);
    const auto path = crf_viterbi(em, s);
    CHECK(path == oracle.best);
    std::vector<Label> labels;
    for (int p : path) labels.push_back(static_cast<Label>(p));
    CHECK(bio_consistent(labels));
  }
}

TEST_CASE("Viterbi tie-break prefers the lowest label index") {
  CrfScores s{Matrix(3, 3), {0, 0, 0}, {0, 0, 0}};
  CHECK(crf_viterbi(Matrix(3, 3), s) == std::vector<int>{0, 0, 0});
}

TEST_CASE("log partition dominates every path and exp(-nll) normalizes") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t T = 3, L = 3;
    const auto s = random_scores(rng, L, false);
    const auto em = random_emissions(rng, T, L);
    const double log_z = crf_log_partition(em, s);
    double total = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          const std::vector<int> p = {a, b, c};
          CHECK(crf_path_score(em, s, p) <= log_z + 1e-12);
          total += std::exp(-crf_nll(em, s, p));
        }
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("out-of-range gold labels are rejected") {
  CrfScores s{Matrix(2, 2), {0, 0}, {0, 0}};
  const std::vector<int> bad = {0, 2};
  CHECK_THROWS_AS(crf_nll(Matrix(2, 2), s, bad), ShapeError);
  CHECK_THROWS(crf_log_partition(Matrix(0, 2), s));
}

TEST_CASE("differentiable CRF NLL: value, gradient, and frozen -inf entries") {
  std::mt19937_64 rng(31);
  ParameterStore store;
  Matrix legal(kNumLabels, kNumLabels);
  std::vector<char> start_legal_c(kNumLabels);
  const auto labels = all_labels();
  for (std::size_t i = 0; i < static_cast<std::size_t>(kNumLabels); ++i) {
    start_legal_c[i] = start_legal(labels[i]);
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumLabels); ++j) legal(i, j) = transition_legal(labels[i], labels[j]);
  }
  bool starts[kNumLabels];
  for (int i = 0; i < kNumLabels; ++i) starts[i] = start_legal_c[static_cast<std::size_t>(i)] != 0;
  CrfParams crf = add_crf(store, "crf", legal, std::span<const bool>(starts, kNumLabels));
  std::normal_distribution<double> d(0.0, 0.5);
  for (auto* p : {crf.transitions, crf.start, crf.stop}) {
    for (auto& x : p->value.flat()) {
      if (std::isfinite(x)) x = d(rng);
    }
  }
  Matrix em_value(4, kNumLabels);
  for (auto& x : em_value.flat()) x = d(rng);
  const std::vector<int> gold = {1, 2, 0, 3};

  Tape check(false);
  Var e0 = constant(check, em_value);
  const double v = check.value(crf_nll(check, e0, crf, gold))(0, 0);
  CHECK(v == doctest::Approx(crf_nll(em_value, crf.scores(), gold)).epsilon(1e-12));

  Parameter& proj = store.add("proj", kNumLabels, kNumLabels);
  for (auto& x : proj.value.flat()) x = d(rng);
  auto loss = [&] {
    store.zero_grad();
    Tape t(true);
    Var em = linear(t, constant(t, em_value), proj, nullptr);
    Var l = crf_nll(t, em, crf, gold);
    t.backward(l);
    return t.value(l)(0, 0);
  };
  const auto report = gradient_check(store, loss);
  CHECK(report.passed);
  loss();
  for (std::size_t i = 0; i < crf.transitions->value.size(); ++i) {
    if (!std::isfinite(crf.transitions->value.flat()[i])) CHECK(crf.transitions->grad.flat()[i] == 0.0);
  }
}
