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
#include <random>

#include "disfl/error.hpp"
#include "disfl/prosody_features.hpp"
#include "doctest.h"

using namespace disfl;

TEST_CASE("pause scaling") {
  CHECK(pause_scale(0.0) == 0.0);
  CHECK(pause_scale(0.5) == doctest::Approx(0.405465).epsilon(1e-6));
  CHECK(pause_scale(3.0) == 1.0);
  CHECK(pause_scale(std::exp(1.0) - 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pause_scale(-0.1), Error);
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> d(0.8);
  std::vector<double> r(2000);
  for (auto& x : r) x = d(rng);
  std::sort(r.begin(), r.end());
  for (std::size_t i = 1; i < r.size(); ++i) {
    CHECK(pause_scale(r[i]) >= pause_scale(r[i - 1]));
    CHECK(pause_scale(r[i]) <= 1.0);
  }
}

TEST_CASE("assembled cue vectors") {
  Utterance u = parse_markup("a b c");
  u.tokens[0].start = 0.2;
  u.tokens[0].end = 0.5;
  u.tokens[1].start = 0.5;  // adjacent
  u.tokens[1].end = 0.8;
  u.tokens[2].start = 1.3;
  u.tokens[2].end = 1.6;
  nn::Matrix wf(3, dsp::kFrameColumns);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < dsp::kFrameColumns; ++k) wf(i, k) = static_cast<double>(10 * i + k);
  }
  const auto cues = assemble_cues(u, wf);
  REQUIRE(cues.cols() == kNumCues);
  // Hand-assembled: [pause_scale(gap), duration, 19 word features].
  const double gaps[] = {0.2, 0.0, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cues(i, 0) == pause_scale(gaps[i]));
    CHECK(cues(i, 1) == doctest::Approx(0.3));
    for (std::size_t k = 0; k < dsp::kFrameColumns; ++k) CHECK(cues(i, 2 + k) == wf(i, k));
  }

  u.tokens[1].start = 0.4;  // overlaps the previous token
  AssembleStats stats;
  const auto clamped = assemble_cues(u, wf, &stats);
  CHECK(clamped(1, 0) == 0.0);
  CHECK(stats.clamped_pauses == 1);
}

TEST_CASE("cue assembly from frame features") {
  Utterance u = parse_markup("a b");
  u.tokens[0].start = 0.0;
  u.tokens[0].end = 0.1;
  u.tokens[1].start = 0.1;
  u.tokens[1].end = 0.2;
  dsp::FrameFeatures f;
  f.values = nn::Matrix(20, dsp::kFrameColumns);
  for (std::size_t t = 0; t < 20; ++t) f.values(t, 3) = t < 9 ? 1.0 : 4.0;
  const auto cues = assemble_cues(u, f);
  // Centres 0.0125..0.0925 (frames 0-8) fall in the first word.
  CHECK(cues(0, 2 + 3) == 1.0);
  CHECK(cues(1, 2 + 3) == 4.0);
}

TEST_CASE("standardizer") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d(5.0, 2.0);
  std::vector<nn::Matrix> rows;
  for (int u = 0; u < 20; ++u) {
    nn::Matrix m(7, kNumCues);
    for (auto& x : m.flat()) x = d(rng);
    rows.push_back(m);
  }
  const auto st = Standardizer::fit(std::span<const nn::Matrix>(rows));
  std::vector<double> sum(kNumCues, 0.0);
  double n = 0;
  for (const auto& m : rows) {
    const auto z = st.apply(m);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t k = 0; k < kNumCues; ++k) sum[k] += z(i, k);
      CHECK(z(i, 0) == m(i, 0));
      CHECK(z(i, 1) == m(i, 1));
    }
    n += static_cast<double>(z.rows());
    const auto back = st.inverse(z);
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back.flat()[i] == doctest::Approx(m.flat()[i]).epsilon(1e-12));
  }
  for (std::size_t k = kFirstF0Cue; k < kNumCues; ++k) CHECK(std::abs(sum[k] / n) < 1e-9);

  nn::Matrix probe(2, kNumCues);
  for (std::size_t k = 0; k < kNumCues; ++k) {
    probe(0, k) = st.mean()[k];
    probe(1, k) = st.mean()[k] + 3 * st.stddev()[k];
  }
  const auto z = st.apply(probe);
  CHECK(z(0, 5) == doctest::Approx(0.0));
  CHECK(z(1, 5) == doctest::Approx(1.0));

  std::vector<nn::Matrix> flat(3, nn::Matrix(2, kNumCues, 1.0));
  try {
    Standardizer::fit(std::span<const nn::Matrix>(flat));
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("nccf") != std::string::npos);
  }
  CHECK_THROWS_AS(Standardizer::fit(std::span<const nn::Matrix>(rows.data(), 1)), Error);
}
