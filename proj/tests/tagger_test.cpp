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
#include <sstream>

#include "disfl/error.hpp"
#include "disfl/nn/gradcheck.hpp"
#include "disfl/synth.hpp"
#include "disfl/tagger.hpp"
#include "doctest.h"

using namespace disfl;

namespace {

struct Fixture {
  SynthCorpus corpus;
  Standardizer standardizer;
  std::unique_ptr<ProsodyModel> prosody;

  Fixture() {
    SynthConfig sc;
    sc.train = 120;
    sc.dev = 40;
    sc.test = 40;
    corpus = synth_generate(3, sc);
    standardizer = Standardizer::fit(corpus.train, corpus.cues);
    ProsodyConfig pc;
    pc.word_hidden = 3;
    pc.phone_hidden = 2;
    pc.pos_dim = 3;
    pc.identity_dim = 2;
    pc.phone_dim = 3;
    pc.stress_dim = 2;
    prosody = std::make_unique<ProsodyModel>(
        ProsodyModel::create(pc, corpus.train, corpus.embeddings, standardizer));
  }

  TaggerInputs inputs() const { return {&corpus.cues, nullptr}; }

  const Utterance& short_disfluent() const {
    for (const auto& u : corpus.train) {
      if (!u.fluent() && u.tokens.size() <= 5) return u;
    }
    throw Error("no short disfluent utterance");
  }
  const Utterance& short_fluent() const {
    for (const auto& u : corpus.train) {
      if (u.fluent() && u.tokens.size() <= 5) return u;
    }
    throw Error("no short fluent utterance");
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

TaggerConfig tiny(const std::string& features, FusionMode mode, TrainingMode training = TrainingMode::kJoint) {
  TaggerConfig c;
  c.fusion.features = FeatureSelection::parse(features);
  c.fusion.mode = mode;
  c.fusion.training = training;
  c.pos_dim = 3;
  c.identity_dim = 2;
  c.hidden = 3;
  c.prosody_hidden = 2;
  c.projection = 4;
  c.text.max_distance = 2;
  return c;
}

TaggerModel make(const TaggerConfig& c) {
  auto& f = fixture();
  return TaggerModel::create(c, f.corpus.train, f.corpus.embeddings, f.standardizer, f.prosody.get());
}

std::vector<Label> labels_of(std::initializer_list<int> v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(static_cast<Label>(x));
  return out;
}

}  // namespace

TEST_CASE("feature selection parsing") {
  const auto f = FeatureSelection::parse("text, innovations");
  CHECK(f.text);
  CHECK_FALSE(f.raw);
  CHECK(f.innovations);
  CHECK(f.to_string() == "text,innovations");
  CHECK(FeatureSelection::parse("raw,text").to_string() == "text,raw");
  CHECK_THROWS_AS(FeatureSelection::parse("text,pitch"), ConfigError);
  CHECK_THROWS_AS(FeatureSelection::parse(""), ConfigError);
  CHECK(parse_fusion_mode("late") == FusionMode::kLate);
  CHECK_THROWS_AS(parse_fusion_mode("middle"), ConfigError);
  CHECK(parse_training_mode("disjoint") == TrainingMode::kDisjoint);
}

TEST_CASE("fusion config validation") {
  FusionConfig c;
  CHECK_NOTHROW(c.validate());
  c.features = FeatureSelection::parse("text,raw");
  CHECK_THROWS_AS(c.validate(), ConfigError);  // single with two sets
  c.mode = FusionMode::kEarly;
  CHECK_NOTHROW(c.validate());
  c.mode = FusionMode::kLate;
  CHECK_NOTHROW(c.validate());
  c.features = FeatureSelection::parse("raw,innovations");
  CHECK_THROWS_AS(c.validate(), ConfigError);  // late without text
  c.features = FeatureSelection::parse("text");
  CHECK_THROWS_AS(c.validate(), ConfigError);  // late without prosody
  c.features = FeatureSelection::parse("text,innovations");
  c.alpha = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.alpha = 0.5;
  c.lambda = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.lambda = 1;
  c.mode = FusionMode::kEarly;
  c.features = FeatureSelection::parse("raw");
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("early fusion concatenates") {
  const nn::Matrix text(4, 100, 1.0);
  const nn::Matrix raw(4, 21, 2.0), z(4, 21, 3.0);
  const nn::Matrix one[] = {raw};
  CHECK(fuse_early(text, one).cols() == 121);
  const nn::Matrix two[] = {raw, z};
  const auto both = fuse_early(text, two);
  CHECK(both.cols() == 142);
  CHECK(both(3, 99) == 1.0);
  CHECK(both(3, 100) == 2.0);
  CHECK(both(3, 121) == 3.0);
  CHECK(fuse_early(text, {}) == text);
  const nn::Matrix short_rows[] = {nn::Matrix(3, 21)};
  CHECK_THROWS_AS(fuse_early(text, short_rows), ShapeError);
}

TEST_CASE("late fusion interpolates") {
  const nn::Matrix u_text(1, 2, {1.0, 0.0}), u_pros(1, 2, {0.0, 1.0});
  CHECK(fuse_late(u_text, u_pros, 0.0) == u_text);
  CHECK(fuse_late(u_text, u_pros, 1.0) == u_pros);
  const auto half = fuse_late(u_text, u_pros, 0.5);
  CHECK(half(0, 0) == 0.5);
  CHECK(half(0, 1) == 0.5);
  CHECK_THROWS_AS(fuse_late(u_text, u_pros, -0.1), ConfigError);
  CHECK_THROWS_AS(fuse_late(u_text, u_pros, 1.1), ConfigError);
  CHECK_THROWS_AS(fuse_late(u_text, nn::Matrix(1, 3), 0.5), ShapeError);
}

TEST_CASE("match features") {
  const Utterance u = parse_markup("I/PRP like/VBP I/PRP like/VBP it/PRP");
  TextFeatureConfig cfg;
  cfg.max_distance = 2;
  const auto m = match_features(u, cfg);
  REQUIRE(m.cols() == 8);
  // d=1: word ahead, word behind, pos ahead, pos behind; then d=2.
  CHECK(m.row(0)[0] == 0.0);
  CHECK(m.row(0)[4] == 1.0);  // "I" two ahead
  CHECK(m.row(0)[6] == 1.0);
  CHECK(m.row(2)[5] == 1.0);  // "I" two behind
  CHECK(m.row(2)[6] == 1.0);  // PRP two ahead ("it")
  CHECK(m.row(2)[4] == 0.0);
  CHECK(m.row(4)[7] == 1.0);
  cfg.word_match = false;
  CHECK(match_features(u, cfg).cols() == 4);
}

TEST_CASE("evaluation counts") {
  const auto s = evaluate_sets({2, 3}, {1, 2});
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == 0.5);
  CHECK(evaluate_sets({1, 2}, {1, 2}).f1 == 1.0);
  const auto none = evaluate_sets({}, {});
  CHECK(none.precision == 1.0);
  CHECK(none.recall == 1.0);
  CHECK(none.f1 == 1.0);
  CHECK(evaluate_sets({1}, {}).f1 == 0.0);
  CHECK(evaluate_sets({}, {1}).f1 == 0.0);

  const std::vector<std::vector<Label>> gold = {labels_of({0, 1, 2, 3})};
  const std::vector<std::vector<Label>> pred = {labels_of({0, 0, 5, 6})};
  const auto e = evaluate(pred, gold);
  CHECK(e.true_positives == 1);
  CHECK(e.predicted == 2);
  CHECK(e.gold == 2);
  const std::vector<std::vector<Label>> bad = {labels_of({0, 0})};
  CHECK_THROWS_AS(evaluate(bad, gold), ShapeError);
}

TEST_CASE("F1 is symmetric; precision and recall swap") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < 12; ++i) {
      if (rng() % 3 == 0) a.push_back(i);
      if (rng() % 3 == 0) b.push_back(i);
    }
    const auto ab = evaluate_sets(a, b), ba = evaluate_sets(b, a);
    CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-15));
    CHECK(ab.precision == ba.recall);
    CHECK(ab.recall == ba.precision);
    if (ab.precision == ab.recall) CHECK(ab.f1 == doctest::Approx(ab.precision));
  }
}

TEST_CASE("alpha search") {
  const std::vector<double> grid = default_alpha_grid();
  REQUIRE(grid.size() == 9);
  auto peak = tune_alpha(grid, [](double a) { return 1.0 - std::abs(a - 0.3); });
  CHECK(peak.best_alpha == doctest::Approx(0.3));
  CHECK(peak.scores.size() == 9);
  auto flat = tune_alpha(grid, [](double) { return 0.7; });
  CHECK(flat.best_alpha == doctest::Approx(0.1));
  const double single[] = {0.5};
  CHECK(tune_alpha(single, [](double) { return 0.2; }).best_alpha == 0.5);
  CHECK_THROWS_AS(tune_alpha(std::span<const double>{}, [](double) { return 0.0; }), ConfigError);
  const double bad[] = {1.5};
  CHECK_THROWS_AS(tune_alpha(bad, [](double) { return 0.0; }), ConfigError);
}

TEST_CASE("seed summary") {
  const auto s = summarize_seeds({1, 2, 3}, {0.5, 0.7, 0.6});
  CHECK(s.mean == doctest::Approx(0.6));
  CHECK(s.best == 0.7);
  CHECK_THROWS_AS(summarize_seeds({1}, {}), Error);
}

TEST_CASE("model construction errors") {
  auto& f = fixture();
  CHECK_THROWS_AS(TaggerModel::create(tiny("innovations", FusionMode::kSingle, TrainingMode::kDisjoint),
                                      f.corpus.train, f.corpus.embeddings, f.standardizer, nullptr),
                  ConfigError);
  CHECK_THROWS_AS(TaggerModel::create(tiny("innovations", FusionMode::kSingle), f.corpus.train,
                                      f.corpus.embeddings, f.standardizer, nullptr),
                  ConfigError);
  CHECK_THROWS_AS(TaggerModel::create(tiny("raw", FusionMode::kSingle), f.corpus.train, f.corpus.embeddings,
                                      Standardizer{}, nullptr),
                  ConfigError);
  CHECK_NOTHROW(TaggerModel::create(tiny("text", FusionMode::kSingle), f.corpus.train, f.corpus.embeddings,
                                    Standardizer{}, nullptr));
}

TEST_CASE("input dimensions") {
  auto& f = fixture();
  auto text = make(tiny("text", FusionMode::kSingle));
  const std::size_t d = f.corpus.embeddings.dim() + 3 + 2 + 8;
  CHECK(text.text_feature_dim() == d);
  CHECK(make(tiny("text,raw,innovations", FusionMode::kEarly)).input_dim() == d + 42);
  CHECK(make(tiny("innovations", FusionMode::kSingle)).input_dim() == 21);
  CHECK(make(tiny("text,raw", FusionMode::kLate)).input_dim() == d);
  nn::Tape t(false);
  const auto x = text.text_features(t, f.corpus.test.front());
  CHECK(t.value(x).cols() == d);
}

TEST_CASE("decoding is legal and matches exhaustive search") {
  auto& f = fixture();
  auto m = make(tiny("text,raw,innovations", FusionMode::kEarly));
  const auto scores = nn::find_crf(m.params(), "crf").scores();
  REQUIRE(scores.labels() == 7);
  std::size_t checked = 0;
  for (const auto& u : f.corpus.test) {
    const auto path = m.decode(u, f.inputs());
    CHECK(bio_consistent(path));
    if (u.tokens.size() > 5) continue;
    nn::Tape t(false);
    const auto em = t.value(m.forward(t, u, f.inputs()).emissions);
    const std::size_t n = u.tokens.size();
    std::vector<int> cur(n, 0), best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (;;) {
      const double s = nn::crf_path_score(em, scores, cur);
      if (s > best_score) {
        best_score = s;
        best = cur;
      }
      std::size_t k = 0;
      while (k < n && ++cur[k] == kNumLabels) cur[k++] = 0;
      if (k == n) break;
    }
    for (std::size_t i = 0; i < n; ++i) CHECK(static_cast<int>(path[i]) == best[i]);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("text-only CRF loss gradient") {
  auto& f = fixture();
  auto m = make(tiny("text", FusionMode::kSingle));
  const Utterance& u = f.short_disfluent();
  const auto rep = nn::gradient_check(m.params(), [&] {
    m.params().zero_grad();
    nn::Tape t(true);
    const auto loss = m.loss(t, u, f.inputs());
    t.backward(loss);
    return t.value(loss)(0, 0);
  });
  for (const auto& e : rep.entries) {
    INFO(e.parameter);
    CHECK(e.max_rel_error < 1e-4);
  }
  CHECK(rep.passed);
}

TEST_CASE("joint late-fusion loss gradient") {
  auto& f = fixture();
  auto m = make(tiny("text,raw,innovations", FusionMode::kLate));
  auto stores = m.trainable_stores();
  REQUIRE(stores.size() == 2);
  for (const Utterance* u : {&f.short_fluent(), &f.short_disfluent()}) {
    nn::GradCheckOptions opts;
    opts.max_entries_per_param = 30;
    // Central differences at h = 1e-5 carry ~1e-10 absolute roundoff here, so
    // entries below 1e-5 are compared on an absolute scale.
    opts.floor = 1e-5;
    const auto rep = nn::gradient_check(stores, [&] {
      for (auto* s : stores) s->zero_grad();
      nn::Tape t(true);
      const auto loss = m.loss(t, *u, f.inputs());
      t.backward(loss);
      return t.value(loss)(0, 0);
    }, opts);
    for (const auto& e : rep.entries) {
      INFO(u->id << " " << e.parameter << " abs " << e.max_abs_error);
      CHECK(e.max_rel_error < 1e-4);
    }
    CHECK(rep.passed);
  }
}

TEST_CASE("disjoint mode keeps the prosody model fixed") {
  auto& f = fixture();
  auto m = make(tiny("innovations", FusionMode::kSingle, TrainingMode::kDisjoint));
  CHECK(m.trainable_stores().size() == 1);
  const auto before = m.prosody()->params().snapshot();
  train_tagger(m, f.corpus.train, f.corpus.dev, f.inputs());
  CHECK(m.prosody()->params().snapshot() == before);
}

TEST_CASE("alpha zero reproduces the text branch") {
  auto& f = fixture();
  auto late_cfg = tiny("text,innovations", FusionMode::kLate);
  late_cfg.fusion.alpha = 0.0;
  auto late = make(late_cfg);
  auto text = make(tiny("text", FusionMode::kSingle));
  // Same text weights in both models.
  for (std::size_t i = 0; i < text.params().size(); ++i) {
    auto& p = text.params().at(i);
    p.value = late.params().get(p.name).value;
  }
  std::vector<std::vector<Label>> gold;
  for (const auto& u : f.corpus.dev) gold.push_back(u.labels);
  for (const auto& u : f.corpus.dev) {
    nn::Tape a(false), b(false);
    CHECK(a.value(late.forward(a, u, f.inputs()).emissions) == b.value(text.forward(b, u, f.inputs()).emissions));
  }
  CHECK(late.score(f.corpus.dev, f.inputs()).f1 == text.score(f.corpus.dev, f.inputs()).f1);
}

TEST_CASE("fluent-only training predicts all O on fluent input") {
  auto& f = fixture();
  std::vector<Utterance> fluent;
  for (const auto& u : f.corpus.train) {
    if (u.fluent()) fluent.push_back(u);
  }
  auto c = tiny("text", FusionMode::kSingle);
  c.epochs = 2;
  c.adam.lr = 0.02;
  auto m = make(c);
  train_tagger(m, fluent, {}, f.inputs());
  for (const auto& u : f.corpus.test) {
    if (!u.fluent()) continue;
    for (Label l : m.decode(u, f.inputs())) CHECK(l == Label::kO);
  }
}

TEST_CASE("training is deterministic and round-trips") {
  auto& f = fixture();
  auto c = tiny("text,raw,innovations", FusionMode::kLate);
  c.epochs = 2;
  c.adam.lr = 0.01;
  auto a = make(c);
  auto b = make(c);
  const auto ra = train_tagger(a, f.corpus.train, f.corpus.dev, f.inputs());
  const auto rb = train_tagger(b, f.corpus.train, f.corpus.dev, f.inputs());
  CHECK(ra.dev_f1 == rb.dev_f1);
  CHECK(ra.train_loss == rb.train_loss);
  CHECK(a.params().snapshot() == b.params().snapshot());

  const auto path = std::filesystem::temp_directory_path() / "disfl_tagger_test.model";
  a.save(path);
  auto loaded = TaggerModel::load(path);
  std::filesystem::remove(path);
  CHECK(loaded.params().snapshot() == a.params().snapshot());
  CHECK(loaded.prosody()->params().snapshot() == a.prosody()->params().snapshot());
  CHECK(loaded.decode_all(f.corpus.test, f.inputs()) == a.decode_all(f.corpus.test, f.inputs()));
  for (const auto& u : f.corpus.test) {
    nn::Tape x(false), y(false);
    CHECK(x.value(a.forward(x, u, f.inputs()).emissions) == y.value(loaded.forward(y, u, f.inputs()).emissions));
  }
}

TEST_CASE("prediction files") {
  Utterance u = parse_markup("[ a + a ] b");
  u.id = "u1";
  const std::vector<Utterance> utts = {u};
  const std::vector<std::vector<Label>> pred = {labels_of({0, 1, 0})};
  const auto path = std::filesystem::temp_directory_path() / "disfl_predictions.tsv";
  write_predictions(path, utts, pred);
  const auto rows = read_predictions(path);
  std::filesystem::remove(path);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].gold == Label::kBRm);
  CHECK(rows[1].predicted == Label::kBRm);
  const auto seqs = group_predictions(rows);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].gold == u.labels);

  std::istringstream bad("u1\t0\tO\tO\nu1\t2\tO\tO\n");
  CHECK_THROWS_AS(group_predictions(parse_predictions(bad, "bad")), FormatError);
  std::istringstream junk("u1\t0\tO\n");
  CHECK_THROWS_AS(parse_predictions(junk, "junk"), FormatError);
  std::istringstream label("u1\t0\tO\tB-XX\n");
  CHECK_THROWS_AS(parse_predictions(label, "label"), FormatError);
}
