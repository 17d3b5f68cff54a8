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

#include "disfl/analysis.hpp"
#include "disfl/error.hpp"
#include "disfl/synth.hpp"
#include "doctest.h"

using namespace disfl;

namespace {

std::vector<Utterance> corpus_sample() {
  SynthConfig sc;
  sc.train = 10;
  sc.dev = 10;
  sc.test = 300;
  return synth_generate(21, sc).test;
}

std::vector<std::vector<Label>> gold_of(const std::vector<Utterance>& utts) {
  std::vector<std::vector<Label>> g;
  for (const auto& u : utts) g.push_back(u.labels);
  return g;
}

std::vector<std::vector<Label>> noisy(const std::vector<Utterance>& utts, std::uint64_t seed, double flip) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(flip);
  auto p = gold_of(utts);
  for (auto& seq : p) {
    for (auto& l : seq) {
      if (coin(rng)) l = is_reparandum(l) ? Label::kO : Label::kBRm;
    }
    repair_bio(seq);
  }
  return p;
}

std::vector<LabeledSequence> as_sequences(const std::vector<Utterance>& utts,
                                          const std::vector<std::vector<Label>>& pred) {
  std::vector<LabeledSequence> out;
  for (std::size_t u = 0; u < utts.size(); ++u) out.push_back({utts[u].id, utts[u].labels, pred[u]});
  return out;
}

}  // namespace

TEST_CASE("token categories") {
  const Utterance rep = parse_markup("[ the + the ] dog");
  auto c = token_categories(rep);
  REQUIRE(c[0].has_value());
  CHECK(c[0]->kind == DisfluencyKind::kRepetition);
  CHECK_FALSE(c[1].has_value());
  CHECK_FALSE(c[2].has_value());

  const Utterance nested = parse_markup("[ [ I + I ] want + we need ] it");
  c = token_categories(nested);
  REQUIRE(c[0].has_value());
  CHECK(c[0]->kind == DisfluencyKind::kRepetition);
  REQUIRE(c[2].has_value());
  CHECK(c[2]->kind == DisfluencyKind::kNested);
  CHECK(c[1]->kind == DisfluencyKind::kNested);  // inner repair, outer reparandum
  CHECK_FALSE(c[3].has_value());

  const Utterance restart = parse_markup("[ so we + ] they left");
  c = token_categories(restart);
  CHECK(c[0]->kind == DisfluencyKind::kRestart);
  CHECK(c[1]->reparandum_length == LengthBucket::k1to2);
}

TEST_CASE("fluent repetition mask") {
  auto m = fluent_repetition_mask(parse_markup("a long long time ago"));
  CHECK(m == std::vector<bool>{false, true, true, false, false});
  m = fluent_repetition_mask(parse_markup("it was very very very good"));
  CHECK(m == std::vector<bool>{false, false, true, true, true, false});
  m = fluent_repetition_mask(parse_markup("I mean it I mean it"));
  // "I mean" merges into one marker token, which the filter then drops.
  CHECK(m == std::vector<bool>{false, true, false, true});
  m = fluent_repetition_mask(parse_markup("the red uh red car"));
  CHECK(m == std::vector<bool>{false, true, false, true, false});
  m = fluent_repetition_mask(parse_markup("on the on the table"));
  CHECK(m == std::vector<bool>{true, true, true, true, false});
  m = fluent_repetition_mask(parse_markup("[ the + the ] the dog"));
  CHECK(m == std::vector<bool>{false, false, false, false});
}

TEST_CASE("perfect predictions recall everything") {
  const auto utts = corpus_sample();
  const auto r = breakdown(utts, gold_of(utts));
  CHECK(r.total.tokens > 0);
  CHECK(r.total.recall() == 1.0);
  for (const auto& [k, cell] : r.by_kind_length) {
    if (cell.tokens) CHECK(cell.recall() == 1.0);
  }
  for (const auto& [k, cell] : r.by_word_class) {
    if (cell.tokens) CHECK(cell.recall() == 1.0);
  }
  CHECK(r.fluent_repetition.tokens > 0);
  CHECK(r.fluent_repetition_fp_rate() == 0.0);
}

TEST_CASE("breakdown counts add up and match a recount") {
  const auto utts = corpus_sample();
  const auto pred = noisy(utts, 4, 0.2);
  const auto r = breakdown(utts, pred);
  std::size_t gold_tokens = 0, hits = 0;
  for (std::size_t u = 0; u < utts.size(); ++u) {
    for (std::size_t i = 0; i < utts[u].labels.size(); ++i) {
      if (!is_reparandum(utts[u].labels[i])) continue;
      ++gold_tokens;
      hits += is_reparandum(pred[u][i]);
    }
  }
  CHECK(r.total.tokens == gold_tokens);
  CHECK(r.total.correct == hits);
  std::size_t kind_sum = 0, cell_sum = 0;
  for (const auto& [k, c] : r.by_kind) kind_sum += c.tokens;
  for (const auto& [k, c] : r.by_kind_length) cell_sum += c.tokens;
  CHECK(kind_sum == gold_tokens);
  CHECK(cell_sum == gold_tokens);
  for (const auto& [k, c] : r.by_kind_length) {
    CHECK(c.recall() >= 0.0);
    CHECK(c.recall() <= 1.0);
  }

  // Recount restart recall from a prediction file.
  const auto path = std::filesystem::temp_directory_path() / "disfl_analysis_preds.tsv";
  write_predictions(path, utts, pred);
  const auto seqs = group_predictions(read_predictions(path));
  std::filesystem::remove(path);
  const auto again = breakdown(utts, align_predictions(utts, seqs));
  std::size_t restart_tokens = 0, restart_hits = 0;
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    const auto cats = token_categories(utts[u]);
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (cats[i] && cats[i]->kind == DisfluencyKind::kRestart) {
        ++restart_tokens;
        restart_hits += is_reparandum(seqs[u].predicted[i]);
      }
    }
  }
  CHECK(again.by_kind.at(DisfluencyKind::kRestart).tokens == restart_tokens);
  CHECK(again.by_kind.at(DisfluencyKind::kRestart).correct == restart_hits);
  CHECK(again.total.correct == r.total.correct);
  CHECK_FALSE(render_breakdown(r).empty());
}

TEST_CASE("prediction alignment errors") {
  const auto utts = corpus_sample();
  auto seqs = as_sequences(utts, gold_of(utts));
  seqs.pop_back();
  CHECK_THROWS_AS(align_predictions(utts, seqs), Error);
  seqs = as_sequences(utts, gold_of(utts));
  seqs[0].predicted.push_back(Label::kO);
  CHECK_THROWS_AS(align_predictions(utts, seqs), ShapeError);
}

TEST_CASE("histogram bins") {
  CHECK(histogram_bin(-100) == 0);
  CHECK(histogram_bin(-6.0) == 1);
  CHECK(histogram_bin(-5.76) == 1);
  CHECK(histogram_bin(-5.75) == 2);
  CHECK(histogram_bin(0.0) == 25);
  CHECK(histogram_bin(5.99) == 48);
  CHECK(histogram_bin(6.0) == 49);
}

TEST_CASE("innovation histogram") {
  const auto utts = corpus_sample();
  TokenTable z;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 2.0);
  for (const auto& u : utts) {
    nn::Matrix m(u.tokens.size(), kNumCues);
    for (auto& v : m.data()) v = n(rng);
    if (!u.fluent()) {
      for (const auto& s : u.spans) m(s.pre_ip_token(), 1) = 1.5;
    }
    z.emplace(u.id, m);
  }
  const auto h = innovation_histogram(z, utts, 1);
  CHECK(h.pre_ip.count > 0);
  CHECK(h.fluent.count > 0);
  double sp = 0, sf = 0;
  for (double v : h.pre_ip.mass) sp += v;
  for (double v : h.fluent.mass) sf += v;
  CHECK(std::abs(sp - 1.0) < 1e-9);
  CHECK(std::abs(sf - 1.0) < 1e-9);
  CHECK(h.pre_ip.mean == doctest::Approx(1.5));
  CHECK(h.pre_ip.mass[histogram_bin(1.5)] == 1.0);
  // Mean over fluent tokens recomputed directly.
  double sum = 0;
  std::size_t count = 0;
  for (const auto& u : utts) {
    if (!u.fluent()) continue;
    for (std::size_t i = 0; i < u.tokens.size(); ++i, ++count) sum += z.at(u.id)(i, 1);
  }
  CHECK(h.fluent.count == count);
  CHECK(h.fluent.mean == doctest::Approx(sum / static_cast<double>(count)).epsilon(1e-12));
  CHECK_THROWS_AS(innovation_histogram(z, utts, 21), Error);
  TokenTable missing;
  CHECK_THROWS_AS(innovation_histogram(missing, utts, 0), Error);
}

TEST_CASE("model diff") {
  const auto utts = corpus_sample();
  const auto gold = gold_of(utts);
  const auto same = model_diff(as_sequences(utts, gold), as_sequences(utts, gold), utts);
  CHECK(same.a_better.empty());
  CHECK(same.b_better.empty());

  auto one_error = gold;
  one_error[3][0] = is_reparandum(one_error[3][0]) ? Label::kO : Label::kBRm;
  repair_bio(one_error[3]);
  const auto d = model_diff(as_sequences(utts, gold), as_sequences(utts, one_error), utts);
  REQUIRE(d.a_better.size() == 1);
  CHECK(d.a_better[0].utt_id == utts[3].id);
  CHECK(d.b_better.empty());

  const auto pa = noisy(utts, 7, 0.1), pb = noisy(utts, 8, 0.1);
  const auto r = model_diff(as_sequences(utts, pa), as_sequences(utts, pb), utts);
  std::size_t a_wins = 0, b_wins = 0;
  for (std::size_t u = 0; u < utts.size(); ++u) {
    std::size_t ea = 0, eb = 0;
    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      const bool g = gold[u][i] != Label::kO && gold[u][i] != Label::kBRp && gold[u][i] != Label::kIRp;
      ea += (pa[u][i] != Label::kO && pa[u][i] != Label::kBRp && pa[u][i] != Label::kIRp) != g;
      eb += (pb[u][i] != Label::kO && pb[u][i] != Label::kBRp && pb[u][i] != Label::kIRp) != g;
    }
    a_wins += ea < eb;
    b_wins += eb < ea;
  }
  CHECK(r.a_better.size() == a_wins);
  CHECK(r.b_better.size() == b_wins);
  CHECK(a_wins + b_wins > 0);
  CHECK_FALSE(render_model_diff(r).empty());

  auto fewer = as_sequences(utts, pa);
  fewer.pop_back();
  CHECK_THROWS_AS(model_diff(fewer, as_sequences(utts, pb), utts), Error);
}
