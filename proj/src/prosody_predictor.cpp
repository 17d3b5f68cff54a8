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

#include "disfl/prosody_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "disfl/error.hpp"
#include "disfl/kernels.hpp"

namespace disfl {

using nn::Activation;
using nn::Matrix;
using nn::Tape;
using nn::Var;

std::vector<Activation> ProsodyConfig::default_mean_activation() {
  std::vector<Activation> a(kNumCues, Activation::kTanh);
  a[kPauseCue] = Activation::kSoftplus;
  a[kDurationCue] = Activation::kSoftplus;
  return a;
}

void ProsodyConfig::validate() const {
  if (word_hidden == 0 || phone_hidden == 0) throw ConfigError("prosody: hidden sizes must be positive");
  if (pos_dim == 0 || identity_dim == 0 || phone_dim == 0 || stress_dim == 0) {
    throw ConfigError("prosody: embedding sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("prosody: dropout must lie in [0,1)");
  if (mean_activation.size() != kNumCues) throw ConfigError("prosody: need one mean activation per cue");
  if (!(adam.lr > 0)) throw ConfigError("prosody: learning rate must be positive");
  if (batch_size == 0) throw ConfigError("prosody: batch size must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("prosody: lr decay must lie in (0,1]");
}

int identity_category(const Token& tok) {
  if (tok.is_filled_pause) return 1;
  if (tok.is_discourse_marker) return 2;
  if (tok.is_fragment) return 3;
  return 0;
}

Var word_lookup(Tape& t, const WordTable& w, std::span<const int> ids) {
  const std::size_t d = w.unk->value.cols();
  Matrix out(ids.size(), d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto src = ids[r] < 0 ? w.unk->value.row(0) : w.table->value.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  const bool unk_used = std::any_of(ids.begin(), ids.end(), [](int i) { return i < 0; });
  std::vector<int> copy(ids.begin(), ids.end());
  nn::Parameter* unk = w.unk;
  return t.push(std::move(out), unk_used && !unk->frozen, [unk, copy](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    for (std::size_t r = 0; r < copy.size(); ++r) {
      if (copy[r] < 0) kernels::axpy(1.0, g.row(r), unk->grad.row(0));
    }
  });
}

double innovation(double observed, double mean, double variance) {
  if (!(variance > 0)) throw Error("innovation: variance must be positive");
  return (observed - mean) / std::sqrt(variance);
}

Matrix compute_innovations(const Matrix& observed, const PredictedCues& d) {
  if (!observed.same_shape(d.mean) || !observed.same_shape(d.variance)) {
    throw ShapeError("compute_innovations: shape mismatch");
  }
  Matrix z(observed.rows(), observed.cols());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z.flat()[i] = innovation(observed.flat()[i], d.mean.flat()[i], d.variance.flat()[i]);
  }
  return z;
}

// ---- model -------------------------------------------------------------

ProsodyModel ProsodyModel::create(const ProsodyConfig& cfg, const std::vector<Utterance>& train,
                                  const Embeddings& embeddings, Standardizer standardizer) {
  cfg.validate();
  if (!standardizer.fitted()) throw Error("prosody model needs a fitted standardizer");
  ProsodyModel m;
  m.cfg_ = cfg;
  m.standardizer_ = std::move(standardizer);
  for (std::size_t i = 0; i < embeddings.size(); ++i) m.words_.add(embeddings.word(i));
  m.word_dim_ = embeddings.dim();
  for (const auto& u : train) {
    for (const auto& t : u.tokens) {
      m.pos_.add(t.pos);
      for (const auto& p : t.phones) m.phones_.add(p.label);
    }
  }
  nn::Rng rng(cfg.seed);
  m.build(rng, embeddings.matrix());
  return m;
}

void ProsodyModel::build(nn::Rng& rng, const Matrix& word_vectors) {
  using nn::init_uniform;
  auto& table = store_.add("word.table", word_vectors.rows(), word_dim_);
  table.value = word_vectors;
  table.frozen = true;
  init_uniform(store_.add("word.unk", 1, word_dim_), 0.1, rng);
  init_uniform(store_.add("pos.emb", pos_.size(), cfg_.pos_dim), 0.1, rng);
  init_uniform(store_.add("identity.emb", kIdentityCategories, cfg_.identity_dim), 0.1, rng);
  init_uniform(store_.add("phone.emb", phones_.size(), cfg_.phone_dim), 0.1, rng);
  init_uniform(store_.add("stress.emb", 3, cfg_.stress_dim), 0.1, rng);
  nn::add_bilstm(store_, "word_lstm", text_input_dim(), cfg_.word_hidden, rng);
  const std::size_t phone_in = cfg_.phone_dim + cfg_.stress_dim + 2 * cfg_.word_hidden;
  nn::add_lstm(store_, "phone_lstm.fwd", phone_in, cfg_.phone_hidden, rng);
  nn::add_lstm(store_, "phone_lstm.bwd", phone_in, cfg_.phone_hidden, rng);
  nn::init_uniform_fan_in(store_.add("head.mean.w", kNumCues, 2 * cfg_.phone_hidden), rng);
  store_.add("head.mean.b", 1, kNumCues);
  nn::init_uniform_fan_in(store_.add("head.var.w", kNumCues, 2 * cfg_.phone_hidden), rng);
  store_.add("head.var.b", 1, kNumCues);
  bind();
}

void ProsodyModel::bind() {
  word_ = {&store_.get("word.table"), &store_.get("word.unk")};
  pos_emb_ = &store_.get("pos.emb");
  id_emb_ = &store_.get("identity.emb");
  phone_emb_ = &store_.get("phone.emb");
  stress_emb_ = &store_.get("stress.emb");
  word_lstm_ = nn::find_bilstm(store_, "word_lstm");
  phone_fwd_ = nn::find_lstm(store_, "phone_lstm.fwd");
  phone_bwd_ = nn::find_lstm(store_, "phone_lstm.bwd");
  w_mean_ = &store_.get("head.mean.w");
  b_mean_ = &store_.get("head.mean.b");
  w_var_ = &store_.get("head.var.w");
  b_var_ = &store_.get("head.var.b");
}

std::size_t ProsodyModel::text_input_dim() const { return word_dim_ + cfg_.pos_dim + cfg_.identity_dim; }

TextIds ProsodyModel::ids(const Utterance& utt) const {
  TextIds ids;
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    const Token& t = utt.tokens[i];
    ids.word.push_back(words_.index(to_lower(t.surface)) - 1);
    ids.pos.push_back(pos_.index(t.pos));
    ids.identity.push_back(identity_category(t));
    ids.first_phone.push_back(ids.phone.size());
    std::vector<Phone> phones = t.phones;
    if (phones.empty()) phones.push_back(Phone{std::string(kUnknownPhone), Stress::kNone});
    for (const auto& p : phones) {
      ids.phone.push_back(phones_.index(p.label));
      ids.stress.push_back(static_cast<int>(p.stress));
      ids.phone_token.push_back(i);
    }
    ids.last_phone.push_back(ids.phone.size() - 1);
  }
  return ids;
}

Var ProsodyModel::text_inputs(Tape& t, const TextIds& ids) {
  const Var parts[] = {word_lookup(t, word_, ids.word), nn::embed(t, *pos_emb_, ids.pos),
                       nn::embed(t, *id_emb_, ids.identity)};
  return nn::concat_cols(t, parts);
}

ProsodyModel::Graph ProsodyModel::forward(Tape& t, const Utterance& utt) {
  if (utt.tokens.empty()) throw Error("prosody model: empty utterance " + utt.id);
  const TextIds id = ids(utt);
  Graph g;
  Var x = nn::dropout(t, text_inputs(t, id), cfg_.dropout);
  g.g = nn::bilstm(t, x, word_lstm_);
  const Var r_parts[] = {nn::embed(t, *phone_emb_, id.phone), nn::embed(t, *stress_emb_, id.stress),
                         nn::gather_rows(t, g.g, id.phone_token)};
  const Var r = nn::concat_cols(t, r_parts);
  const Var fwd = nn::lstm(t, r, phone_fwd_, false);
  const Var bwd = nn::lstm(t, r, phone_bwd_, true);
  const Var h_parts[] = {nn::gather_rows(t, fwd, id.last_phone), nn::gather_rows(t, bwd, id.first_phone)};
  g.h = nn::concat_cols(t, h_parts);
  const Var h = nn::dropout(t, g.h, cfg_.dropout);
  g.mean = nn::activate_columns(t, nn::linear(t, h, *w_mean_, b_mean_), cfg_.mean_activation);
  g.var = nn::activate(t, nn::linear(t, h, *w_var_, b_var_), Activation::kSoftplus);
  return g;
}

Var ProsodyModel::nll(Tape& t, const Graph& g, const Matrix& standardized) {
  return nn::gaussian_nll(t, g.mean, g.var, standardized);
}

PredictedCues ProsodyModel::predict(const Utterance& utt) {
  Tape t(false);
  const Graph g = forward(t, utt);
  return {t.value(g.mean), t.value(g.var)};
}

Matrix ProsodyModel::innovations(const Utterance& utt, const Matrix& raw_cues) {
  if (raw_cues.rows() != utt.tokens.size()) {
    throw ShapeError("innovations: " + utt.id + " has " + std::to_string(utt.tokens.size()) + " tokens but " +
                     std::to_string(raw_cues.rows()) + " cue rows");
  }
  return compute_innovations(standardizer_.apply(raw_cues), predict(utt));
}

double ProsodyModel::mean_nll(const std::vector<const Utterance*>& utts, const TokenTable& raw_cues) {
  double total = 0;
  std::size_t tokens = 0;
  for (const Utterance* u : utts) {
    Tape t(false);
    const Graph g = forward(t, *u);
    total += t.value(nll(t, g, standardizer_.apply(raw_cues.at(u->id))))(0, 0);
    tokens += u->tokens.size();
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

// ---- persistence -------------------------------------------------------

namespace {

std::string activation_code(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftplus: return "softplus";
  }
  return "identity";
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "softplus") return Activation::kSoftplus;
  throw ConfigError("unknown activation '" + s + "'");
}

std::size_t get_size(const nn::ModelArchive& ar, const std::string& key) {
  return static_cast<std::size_t>(std::stoull(ar.get(key)));
}

}  // namespace

nn::ModelArchive ProsodyModel::to_archive() const {
  nn::ModelArchive ar;
  ar.kind = "prosody";
  ar.set("word_hidden", std::to_string(cfg_.word_hidden));
  ar.set("phone_hidden", std::to_string(cfg_.phone_hidden));
  ar.set("pos_dim", std::to_string(cfg_.pos_dim));
  ar.set("identity_dim", std::to_string(cfg_.identity_dim));
  ar.set("phone_dim", std::to_string(cfg_.phone_dim));
  ar.set("stress_dim", std::to_string(cfg_.stress_dim));
  ar.set("word_dim", std::to_string(word_dim_));
  ar.set("dropout", nn::format_double(cfg_.dropout));
  ar.set("seed", std::to_string(cfg_.seed));
  std::string acts;
  for (std::size_t k = 0; k < cfg_.mean_activation.size(); ++k) {
    acts += (k ? "," : "") + activation_code(cfg_.mean_activation[k]);
  }
  ar.set("mean_activation", acts);
  ar.set("standardizer_divisor", nn::format_double(standardizer_.divisor()));
  ar.vocabs["words"] = words_.items();
  ar.vocabs["pos"] = pos_.items();
  ar.vocabs["phones"] = phones_.items();
  ar.add_array("standardizer.mean", Matrix(1, kNumCues, standardizer_.mean()));
  ar.add_array("standardizer.std", Matrix(1, kNumCues, standardizer_.stddev()));
  ar.add_store(store_);
  return ar;
}

ProsodyModel ProsodyModel::from_archive(const nn::ModelArchive& ar) {
  if (ar.kind != "prosody") throw ConfigError("expected a prosody model, got kind '" + ar.kind + "'");
  ProsodyModel m;
  m.cfg_.word_hidden = get_size(ar, "word_hidden");
  m.cfg_.phone_hidden = get_size(ar, "phone_hidden");
  m.cfg_.pos_dim = get_size(ar, "pos_dim");
  m.cfg_.identity_dim = get_size(ar, "identity_dim");
  m.cfg_.phone_dim = get_size(ar, "phone_dim");
  m.cfg_.stress_dim = get_size(ar, "stress_dim");
  m.cfg_.dropout = nn::parse_double(ar.get("dropout"));
  m.cfg_.seed = std::stoull(ar.get("seed"));
  m.word_dim_ = get_size(ar, "word_dim");
  m.cfg_.mean_activation.clear();
  std::stringstream acts(ar.get("mean_activation"));
  std::string a;
  while (std::getline(acts, a, ',')) m.cfg_.mean_activation.push_back(parse_activation(a));
  m.cfg_.validate();
  m.words_ = Vocabulary(ar.vocabs.at("words"));
  m.pos_ = Vocabulary(ar.vocabs.at("pos"));
  m.phones_ = Vocabulary(ar.vocabs.at("phones"));
  m.standardizer_ = Standardizer(ar.array("standardizer.mean").data(), ar.array("standardizer.std").data(),
                                 nn::parse_double(ar.get("standardizer_divisor")));
  nn::Rng rng(0);
  m.build(rng, Matrix(m.words_.size() - 1, m.word_dim_));
  ar.load_store(m.store_);
  m.store_.get("word.table").frozen = true;
  return m;
}

void ProsodyModel::save(const std::filesystem::path& path) const { nn::save_archive(to_archive(), path); }

ProsodyModel ProsodyModel::load(const std::filesystem::path& path) {
  return from_archive(nn::load_archive(path));
}

// ---- training ----------------------------------------------------------

ProsodyTrainReport train_prosody(ProsodyModel& model, const std::vector<Utterance>& train,
                                 const std::vector<Utterance>& dev, const TokenTable& raw_cues) {
  std::vector<const Utterance*> fluent_train, fluent_dev;
  for (const auto& u : train) {
    if (u.fluent()) fluent_train.push_back(&u);
  }
  for (const auto& u : dev) {
    if (u.fluent()) fluent_dev.push_back(&u);
  }
  if (fluent_train.empty()) throw Error("train_prosody: no fluent training utterances");
  std::vector<Matrix> targets;
  for (const Utterance* u : fluent_train) {
    auto it = raw_cues.find(u->id);
    if (it == raw_cues.end()) throw Error("train_prosody: no cues for " + u->id);
    targets.push_back(model.standardizer().apply(it->second));
  }

  const ProsodyConfig& cfg = model.config();
  nn::Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 17);
  ProsodyTrainReport report;
  report.fluent_train = fluent_train.size();
  auto dev_score = [&] {
    return fluent_dev.empty() ? std::numeric_limits<double>::quiet_NaN() : model.mean_nll(fluent_dev, raw_cues);
  };
  report.initial_dev_nll = dev_score();
  report.best_dev_nll = report.initial_dev_nll;
  auto best = model.params().snapshot();
  std::size_t stale = 0;
  std::vector<std::size_t> order(fluent_train.size());
  std::iota(order.begin(), order.end(), 0);
  nn::AdamConfig adam = cfg.adam;
  model.params().zero_grad();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    std::size_t tokens = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      const std::size_t idx = order[n];
      Tape t(true, &rng);
      const auto g = model.forward(t, *fluent_train[idx]);
      const Var loss = model.nll(t, g, targets[idx]);
      t.backward(loss);
      if ((n + 1) % cfg.batch_size == 0 || n + 1 == order.size()) nn::adam_step(model.params(), adam);
      total += t.value(loss)(0, 0);
      tokens += fluent_train[idx]->tokens.size();
    }
    adam.lr *= cfg.lr_decay;
    report.train_nll.push_back(total / static_cast<double>(tokens));
    const double d = dev_score();
    report.dev_nll.push_back(d);
    if (fluent_dev.empty()) {
      best = model.params().snapshot();
      report.best_epoch = epoch;
      continue;
    }
    if (d < report.best_dev_nll) {
      report.best_dev_nll = d;
      report.best_epoch = epoch;
      best = model.params().snapshot();
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  model.params().restore(best);
  return report;
}

TokenTable innovation_table(ProsodyModel& model, const std::vector<Utterance>& utts, const TokenTable& raw_cues) {
  TokenTable out;
  for (const auto& u : utts) {
    auto it = raw_cues.find(u.id);
    if (it == raw_cues.end()) throw Error("innovations: no cues for " + u.id);
    out.emplace(u.id, model.innovations(u, it->second));
  }
  return out;
}

}  // namespace disfl
