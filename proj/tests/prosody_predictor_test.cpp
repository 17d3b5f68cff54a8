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
#include "disfl/nn/gradcheck.hpp"
#include "disfl/prosody_predictor.hpp"
#include "disfl/synth.hpp"
#include "doctest.h"

using namespace disfl;

namespace {

SynthCorpus small_corpus() {
  SynthConfig sc;
  sc.train = 160;
  sc.dev = 40;
  sc.test = 40;
  return synth_generate(11, sc);
}

ProsodyConfig tiny_config() {
  ProsodyConfig c;
  c.word_hidden = 4;
  c.phone_hidden = 3;
  c.pos_dim = 3;
  c.identity_dim = 2;
  c.phone_dim = 3;
  c.stress_dim = 2;
  return c;
}

ProsodyModel make_model(const SynthCorpus& c, const ProsodyConfig& cfg) {
  return ProsodyModel::create(cfg, c.train, c.embeddings, Standardizer::fit(c.train, c.cues));
}

void zero_all(ProsodyModel& m) {
  for (std::size_t i = 0; i < m.params().size(); ++i) m.params().at(i).value.fill(0.0);
}

}  // namespace

TEST_CASE("innovation examples") {
  CHECK(innovation(0.5, 0.2, 0.01) == doctest::Approx(3.0));
  CHECK(innovation(0.2, 0.2, 4.0) == 0.0);
  CHECK(innovation(-1.0, 1.0, 4.0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(innovation(1.0, 0.0, 0.0), Error);
  PredictedCues d{nn::Matrix(1, 2, {0.2, 0.0}), nn::Matrix(1, 2, {0.01, 1.0})};
  const auto z = compute_innovations(nn::Matrix(1, 2, {0.5, -2.0}), d);
  CHECK(z(0, 0) == doctest::Approx(3.0));
  CHECK(z(0, 1) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(compute_innovations(nn::Matrix(2, 2), d), ShapeError);
}

TEST_CASE("identity categories") {
  const Utterance u = parse_markup("uh well the dog- ran");
  REQUIRE(u.tokens.size() == 5);
  CHECK(identity_category(u.tokens[0]) == 1);
  CHECK(identity_category(u.tokens[1]) == 2);
  CHECK(identity_category(u.tokens[2]) == 0);
  CHECK(identity_category(u.tokens[3]) == 3);
  CHECK(identity_category(u.tokens[4]) == 0);
}

TEST_CASE("config validation") {
  ProsodyConfig c;
  CHECK_NOTHROW(c.validate());
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ProsodyConfig{};
  c.mean_activation.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ProsodyConfig{};
  c.word_hidden = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero weights give the closed-form output") {
  const auto corpus = small_corpus();
  auto m = make_model(corpus, tiny_config());
  zero_all(m);
  const auto& u = corpus.test.front();
  const auto p = m.predict(u);
  REQUIRE(p.mean.rows() == u.tokens.size());
  REQUIRE(p.mean.cols() == kNumCues);
  const double ln2 = std::log(2.0);
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    for (std::size_t k = 0; k < kNumCues; ++k) {
      CHECK(p.mean(i, k) == doctest::Approx(k < 2 ? ln2 : 0.0).epsilon(1e-12));
      CHECK(p.variance(i, k) == doctest::Approx(ln2).epsilon(1e-12));
    }
  }
}

TEST_CASE("variance stays positive under random weights") {
  const auto corpus = small_corpus();
  auto m = make_model(corpus, tiny_config());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  std::size_t draws = 0;
  for (int trial = 0; draws < 10000; ++trial) {
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      for (auto& v : m.params().at(i).value.flat()) {
        if (std::isfinite(v)) v = n(rng);
      }
    }
    const auto p = m.predict(corpus.train[static_cast<std::size_t>(trial) % corpus.train.size()]);
    for (double v : p.variance.flat()) {
      CHECK(v > 0.0);
      ++draws;
    }
    for (std::size_t i = 0; i < p.mean.rows(); ++i) {
      CHECK(p.mean(i, 0) >= 0.0);
      CHECK(p.mean(i, 1) >= 0.0);
      for (std::size_t k = 2; k < kNumCues; ++k) CHECK(std::abs(p.mean(i, k)) <= 1.0);
    }
  }
}

TEST_CASE("token summaries see both directions") {
  const auto corpus = small_corpus();
  auto m = make_model(corpus, tiny_config());
  const Utterance* base = nullptr;
  for (const auto& u : corpus.train) {
    if (u.tokens.size() >= 4) base = &u;
  }
  REQUIRE(base != nullptr);
  // Swap in a token with different text at either end.
  const Token other = corpus.train.front().tokens.front();
  Utterance a = *base, b = *base, c = *base;
  const std::size_t last = a.tokens.size() - 1;
  b.tokens[last] = other;
  c.tokens[0] = other;
  REQUIRE(other.surface != a.tokens[0].surface);
  REQUIRE(other.surface != a.tokens[last].surface);
  auto h_of = [&](const Utterance& u) {
    nn::Tape t(false);
    const auto g = m.forward(t, u);
    return t.value(g.h);
  };
  const auto ha = h_of(a), hb = h_of(b), hc = h_of(c);
  // Changing a later word moves the first token; changing an earlier word
  // moves the last token.
  double later = 0, earlier = 0;
  for (std::size_t k = 0; k < ha.cols(); ++k) {
    later += std::abs(ha(0, k) - hb(0, k));
    earlier += std::abs(ha(last, k) - hc(last, k));
  }
  CHECK(later > 1e-6);
  CHECK(earlier > 1e-6);
}

TEST_CASE("unknown words use the trainable row") {
  const auto corpus = small_corpus();
  auto m = make_model(corpus, tiny_config());
  Utterance u = parse_markup("zzqx/NN");
  const auto ids = m.ids(u);
  REQUIRE(ids.word.size() == 1);
  CHECK(ids.word[0] == -1);
  CHECK(ids.phone.size() == 1);
  nn::Tape t(true);
  const auto x = m.text_inputs(t, ids);
  const auto& unk = m.params().get("word.unk").value;
  for (std::size_t k = 0; k < unk.cols(); ++k) CHECK(t.value(x)(0, k) == unk(0, k));
}

TEST_CASE("gradients match finite differences") {
  const auto corpus = small_corpus();
  ProsodyConfig cfg = tiny_config();
  cfg.word_hidden = 2;
  cfg.phone_hidden = 2;
  auto m = make_model(corpus, cfg);
  const Utterance* pick = nullptr;
  for (const auto& c : corpus.train) {
    if (c.tokens.size() >= 3 && c.tokens.size() <= 5) {
      pick = &c;
      break;
    }
  }
  REQUIRE(pick != nullptr);
  const Utterance& u = *pick;
  const nn::Matrix target = m.standardizer().apply(corpus.cues.at(u.id));
  nn::GradCheckOptions opts;
  opts.max_entries_per_param = 40;
  const auto rep = nn::gradient_check(m.params(), [&] {
    m.params().zero_grad();
    nn::Tape t(true);
    const auto g = m.forward(t, u);
    const auto loss = m.nll(t, g, target);
    t.backward(loss);
    return t.value(loss)(0, 0);
  }, opts);
  for (const auto& e : rep.entries) {
    INFO(e.parameter << " abs " << e.max_abs_error);
    CHECK(e.max_rel_error < 1e-4);
  }
  CHECK(rep.passed);
  // The pretrained table is frozen.
  for (const auto& e : rep.entries) CHECK(e.parameter != "word.table");
}

TEST_CASE("training lowers dev NLL and round-trips") {
  const auto corpus = small_corpus();
  ProsodyConfig cfg = tiny_config();
  cfg.word_hidden = 8;
  cfg.phone_hidden = 6;
  cfg.epochs = 4;
  cfg.adam.lr = 0.01;
  auto m = make_model(corpus, cfg);
  const auto table_before = m.params().get("word.table").value;
  const auto rep = train_prosody(m, corpus.train, corpus.dev, corpus.cues);
  CHECK(rep.fluent_train > 0);
  CHECK(rep.best_epoch >= 1);
  CHECK(rep.best_dev_nll < rep.initial_dev_nll);
  CHECK(m.params().get("word.table").value == table_before);

  const auto path = std::filesystem::temp_directory_path() / "disfl_prosody_test.model";
  m.save(path);
  auto loaded = ProsodyModel::load(path);
  std::filesystem::remove(path);
  for (const auto& u : corpus.test) {
    const auto a = m.innovations(u, corpus.cues.at(u.id));
    const auto b = loaded.innovations(u, corpus.cues.at(u.id));
    CHECK(a == b);
  }
  const auto table = innovation_table(m, corpus.test, corpus.cues);
  CHECK(table.size() == corpus.test.size());
}

TEST_CASE("training needs fluent utterances") {
  const auto corpus = small_corpus();
  auto m = make_model(corpus, tiny_config());
  std::vector<Utterance> disfluent;
  for (const auto& u : corpus.train) {
    if (!u.fluent()) disfluent.push_back(u);
  }
  CHECK_THROWS_AS(train_prosody(m, disfluent, corpus.dev, corpus.cues), Error);
}
