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

#include "disfl/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "disfl/error.hpp"

namespace disfl {

using nn::Matrix;
using nn::Tape;
using nn::Var;

// ---- configuration -----------------------------------------------------

FeatureSelection FeatureSelection::parse(std::string_view csv) {
  FeatureSelection f;
  std::stringstream ss{std::string(csv)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(" \t") - b + 1);
    if (item == "text") {
      f.text = true;
    } else if (item == "raw") {
      f.raw = true;
    } else if (item == "innovations") {
      f.innovations = true;
    } else {
      throw ConfigError("unknown feature set '" + item + "' (expected text, raw, innovations)");
    }
  }
  if (f.count() == 0) throw ConfigError("empty feature set");
  return f;
}

std::string FeatureSelection::to_string() const {
  std::string s;
  auto put = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  put(text, "text");
  put(raw, "raw");
  put(innovations, "innovations");
  return s;
}

FusionMode parse_fusion_mode(std::string_view s) {
  if (s == "single") return FusionMode::kSingle;
  if (s == "early") return FusionMode::kEarly;
  if (s == "late") return FusionMode::kLate;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "'");
}

std::string_view fusion_mode_name(FusionMode m) {
  switch (m) {
    case FusionMode::kSingle: return "single";
    case FusionMode::kEarly: return "early";
    case FusionMode::kLate: return "late";
  }
  return "single";
}

TrainingMode parse_training_mode(std::string_view s) {
  if (s == "joint") return TrainingMode::kJoint;
  if (s == "disjoint") return TrainingMode::kDisjoint;
  throw ConfigError("unknown training mode '" + std::string(s) + "'");
}

std::string_view training_mode_name(TrainingMode m) { return m == TrainingMode::kJoint ? "joint" : "disjoint"; }

void FusionConfig::validate() const {
  const std::size_t n = features.count();
  if (n == 0) throw ConfigError("fusion: no feature set selected");
  switch (mode) {
    case FusionMode::kSingle:
      if (n != 1) throw ConfigError("fusion: single mode needs exactly one feature set, got " + features.to_string());
      break;
    case FusionMode::kEarly:
      if (n < 2) throw ConfigError("fusion: early mode needs at least two feature sets");
      break;
    case FusionMode::kLate:
      if (!features.text || !features.prosodic()) {
        throw ConfigError("fusion: late mode needs text and a prosodic feature set");
      }
      break;
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("fusion: alpha must lie in [0,1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("fusion: lambda must be finite and >= 0");
}

std::size_t TextFeatureConfig::dims() const {
  return (std::size_t{word_match} + std::size_t{pos_match}) * 2 * max_distance;
}

std::string TextFeatureConfig::to_string() const {
  std::string s = "embeddings(word,pos,identity)";
  if (word_match) s += ",word_match";
  if (pos_match) s += ",pos_match";
  if (word_match || pos_match) s += ",distance=1.." + std::to_string(max_distance);
  return s;
}

void TaggerConfig::validate() const {
  fusion.validate();
  if (pos_dim == 0 || identity_dim == 0) throw ConfigError("tagger: embedding sizes must be positive");
  if (hidden == 0 || prosody_hidden == 0 || projection == 0) {
    throw ConfigError("tagger: hidden and projection sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("tagger: dropout must lie in [0,1)");
  if (!(adam.lr > 0)) throw ConfigError("tagger: learning rate must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("tagger: lr decay must lie in (0,1]");
}

// ---- fusion ------------------------------------------------------------

Matrix fuse_early(const Matrix& text, std::span<const Matrix> prosody) {
  std::size_t cols = text.cols();
  for (const auto& p : prosody) {
    if (p.rows() != text.rows()) {
      throw ShapeError("fuse_early: " + std::to_string(text.rows()) + " text rows vs " +
                       std::to_string(p.rows()) + " prosody rows");
    }
    cols += p.cols();
  }
  Matrix out(text.rows(), cols);
  for (std::size_t r = 0; r < text.rows(); ++r) {
    auto dst = out.row(r).begin();
    dst = std::copy(text.row(r).begin(), text.row(r).end(), dst);
    for (const auto& p : prosody) dst = std::copy(p.row(r).begin(), p.row(r).end(), dst);
  }
  return out;
}

Matrix fuse_late(const Matrix& text, const Matrix& prosody, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("fuse_late: alpha must lie in [0,1]");
  if (!text.same_shape(prosody)) throw ShapeError("fuse_late: branch states differ in shape");
  Matrix out(text.rows(), text.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = alpha * prosody.data()[i] + (1.0 - alpha) * text.data()[i];
  }
  return out;
}

Var fuse_late(Tape& t, Var text, Var prosody, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("fuse_late: alpha must lie in [0,1]");
  return nn::mix(t, prosody, text, alpha);
}

Matrix match_features(const Utterance& utt, const TextFeatureConfig& cfg) {
  const std::size_t n = utt.tokens.size();
  Matrix out(n, cfg.dims());
  std::vector<std::string> words(n);
  for (std::size_t i = 0; i < n; ++i) words[i] = to_lower(utt.tokens[i].surface);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t d = 1; d <= cfg.max_distance; ++d) {
      const bool ahead = i + d < n;
      const bool behind = i >= d;
      if (cfg.word_match) {
        out(i, c++) = ahead && words[i] == words[i + d] ? 1.0 : 0.0;
        out(i, c++) = behind && words[i] == words[i - d] ? 1.0 : 0.0;
      }
      if (cfg.pos_match) {
        out(i, c++) = ahead && utt.tokens[i].pos == utt.tokens[i + d].pos ? 1.0 : 0.0;
        out(i, c++) = behind && utt.tokens[i].pos == utt.tokens[i - d].pos ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

// ---- evaluation --------------------------------------------------------

Scores make_scores(std::size_t tp, std::size_t predicted, std::size_t gold) {
  Scores s;
  s.true_positives = tp;
  s.predicted = predicted;
  s.gold = gold;
  if (predicted == 0 && gold == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  if (predicted == 0 || gold == 0) return s;
  s.precision = static_cast<double>(tp) / static_cast<double>(predicted);
  s.recall = static_cast<double>(tp) / static_cast<double>(gold);
  s.f1 = tp == 0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::vector<std::size_t> reparandum_set(std::span<const Label> labels) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (is_reparandum(labels[i])) out.push_back(i);
  }
  return out;
}

Scores evaluate(std::span<const std::vector<Label>> predicted, std::span<const std::vector<Label>> gold) {
  if (predicted.size() != gold.size()) {
    throw ShapeError("evaluate: " + std::to_string(predicted.size()) + " predicted vs " +
                     std::to_string(gold.size()) + " gold sequences");
  }
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    if (predicted[u].size() != gold[u].size()) {
      throw ShapeError("evaluate: sequence " + std::to_string(u) + " has " + std::to_string(predicted[u].size()) +
                       " predicted vs " + std::to_string(gold[u].size()) + " gold labels");
    }
    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      const bool p = is_reparandum(predicted[u][i]);
      const bool g = is_reparandum(gold[u][i]);
      np += p;
      ng += g;
      tp += p && g;
    }
  }
  return make_scores(tp, np, ng);
}

Scores evaluate_sets(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold) {
  std::vector<std::size_t> p = predicted, g = gold;
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  std::vector<std::size_t> both;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(both));
  return make_scores(both.size(), p.size(), g.size());
}

Matrix bio_transition_mask() {
  Matrix m(kNumLabels, kNumLabels);
  const auto labels = all_labels();
  for (int i = 0; i < kNumLabels; ++i) {
    for (int j = 0; j < kNumLabels; ++j) m(i, j) = transition_legal(labels[i], labels[j]) ? 1.0 : 0.0;
  }
  return m;
}

std::array<bool, kNumLabels> bio_start_mask() {
  std::array<bool, kNumLabels> m{};
  const auto labels = all_labels();
  for (int i = 0; i < kNumLabels; ++i) m[i] = start_legal(labels[i]);
  return m;
}

// ---- model -------------------------------------------------------------

TaggerModel TaggerModel::create(const TaggerConfig& cfg, const std::vector<Utterance>& train,
                                const Embeddings& embeddings, Standardizer standardizer,
                                const ProsodyModel* prosody) {
  cfg.validate();
  TaggerModel m;
  m.cfg_ = cfg;
  if (cfg.fusion.features.innovations) {
    if (prosody == nullptr) {
      throw ConfigError(std::string("tagger: innovations in ") +
                        std::string(training_mode_name(cfg.fusion.training)) +
                        " mode need a pretrained prosody model");
    }
    m.prosody_ = std::make_unique<ProsodyModel>(ProsodyModel::from_archive(prosody->to_archive()));
    if (cfg.fusion.training == TrainingMode::kDisjoint) m.prosody_->params().set_frozen(true);
  }
  if (!standardizer.fitted() && prosody != nullptr) standardizer = prosody->standardizer();
  if (cfg.fusion.features.raw && !standardizer.fitted()) {
    throw ConfigError("tagger: raw cues need a fitted standardizer");
  }
  m.standardizer_ = std::move(standardizer);
  for (std::size_t i = 0; i < embeddings.size(); ++i) m.words_.add(embeddings.word(i));
  m.word_dim_ = embeddings.dim();
  for (const auto& u : train) {
    for (const auto& t : u.tokens) m.pos_.add(t.pos);
  }
  nn::Rng rng(cfg.seed);
  m.build(rng, embeddings.matrix());
  return m;
}

TaggerModel::Branch TaggerModel::add_branch(const std::string& prefix, std::size_t input, std::size_t hidden,
                                            nn::Rng& rng) {
  nn::add_bilstm(store_, prefix + ".lstm", input, hidden, rng);
  nn::init_uniform_fan_in(store_.add(prefix + ".proj.w", cfg_.projection, 2 * hidden), rng);
  store_.add(prefix + ".proj.b", 1, cfg_.projection);
  return find_branch(prefix);
}

TaggerModel::Branch TaggerModel::find_branch(const std::string& prefix) {
  return {nn::find_bilstm(store_, prefix + ".lstm"), &store_.get(prefix + ".proj.w"),
          &store_.get(prefix + ".proj.b")};
}

std::size_t TaggerModel::text_feature_dim() const {
  return word_dim_ + cfg_.pos_dim + cfg_.identity_dim + cfg_.text.dims();
}

std::size_t TaggerModel::prosody_feature_dim() const {
  return (cfg_.fusion.features.raw ? kNumCues : 0) + (cfg_.fusion.features.innovations ? kNumCues : 0);
}

std::size_t TaggerModel::input_dim() const {
  if (cfg_.fusion.mode == FusionMode::kLate) return text_feature_dim();
  return (cfg_.fusion.features.text ? text_feature_dim() : 0) + prosody_feature_dim();
}

void TaggerModel::build(nn::Rng& rng, const Matrix& word_vectors) {
  if (cfg_.fusion.features.text) {
    auto& table = store_.add("word.table", word_vectors.rows(), word_dim_);
    table.value = word_vectors;
    table.frozen = true;
    nn::init_uniform(store_.add("word.unk", 1, word_dim_), 0.1, rng);
    nn::init_uniform(store_.add("pos.emb", pos_.size(), cfg_.pos_dim), 0.1, rng);
    nn::init_uniform(store_.add("identity.emb", kIdentityCategories, cfg_.identity_dim), 0.1, rng);
  }
  add_branch("main", input_dim(), cfg_.hidden, rng);
  if (cfg_.fusion.mode == FusionMode::kLate) add_branch("prosody", prosody_feature_dim(), cfg_.prosody_hidden, rng);
  nn::init_uniform_fan_in(store_.add("emit.w", kNumLabels, cfg_.projection), rng);
  store_.add("emit.b", 1, kNumLabels);
  const auto start = bio_start_mask();
  nn::add_crf(store_, "crf", bio_transition_mask(), start);
  bind();
}

void TaggerModel::bind() {
  if (cfg_.fusion.features.text) {
    word_ = {&store_.get("word.table"), &store_.get("word.unk")};
    pos_emb_ = &store_.get("pos.emb");
    id_emb_ = &store_.get("identity.emb");
  }
  main_ = find_branch("main");
  if (cfg_.fusion.mode == FusionMode::kLate) prosody_branch_ = find_branch("prosody");
  emit_w_ = &store_.get("emit.w");
  emit_b_ = &store_.get("emit.b");
  crf_ = nn::find_crf(store_, "crf");
}

Var TaggerModel::text_features(Tape& t, const Utterance& utt) {
  if (!cfg_.fusion.features.text) throw ConfigError("tagger: model has no text features");
  const std::size_t n = utt.tokens.size();
  std::vector<int> word(n), pos(n), identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    word[i] = words_.index(to_lower(utt.tokens[i].surface)) - 1;
    pos[i] = pos_.index(utt.tokens[i].pos);
    identity[i] = identity_category(utt.tokens[i]);
  }
  std::vector<Var> parts = {word_lookup(t, word_, word), nn::embed(t, *pos_emb_, pos),
                            nn::embed(t, *id_emb_, identity)};
  if (cfg_.text.dims() > 0) parts.push_back(nn::constant(t, match_features(utt, cfg_.text)));
  return nn::concat_cols(t, parts);
}

namespace {

const Matrix& lookup_rows(const TokenTable* table, const Utterance& utt, const char* what) {
  if (table == nullptr) throw ConfigError(std::string("tagger: no ") + what + " table supplied");
  auto it = table->find(utt.id);
  if (it == table->end()) throw Error(std::string("tagger: no ") + what + " for " + utt.id);
  if (it->second.rows() != utt.tokens.size() || it->second.cols() != kNumCues) {
    throw ShapeError(std::string("tagger: ") + what + " for " + utt.id + " is " +
                     std::to_string(it->second.rows()) + "x" + std::to_string(it->second.cols()) + ", expected " +
                     std::to_string(utt.tokens.size()) + "x" + std::to_string(kNumCues));
  }
  return it->second;
}

}  // namespace

std::vector<Var> TaggerModel::prosody_features(Tape& t, const Utterance& utt, const TaggerInputs& in, Var* nll) {
  std::vector<Var> out;
  if (cfg_.fusion.features.raw) {
    out.push_back(nn::constant(t, standardizer_.apply(lookup_rows(in.raw_cues, utt, "raw cues"))));
  }
  if (cfg_.fusion.features.innovations) {
    if (cfg_.fusion.training == TrainingMode::kJoint) {
      const Matrix target = prosody_->standardizer().apply(lookup_rows(in.raw_cues, utt, "raw cues"));
      const auto g = prosody_->forward(t, utt);
      out.push_back(nn::zscore(t, g.mean, g.var, target));
      if (utt.fluent()) *nll = prosody_->nll(t, g, target);
    } else if (in.innovations != nullptr && in.innovations->count(utt.id)) {
      out.push_back(nn::constant(t, lookup_rows(in.innovations, utt, "innovations")));
    } else {
      out.push_back(nn::constant(t, prosody_->innovations(utt, lookup_rows(in.raw_cues, utt, "raw cues"))));
    }
  }
  return out;
}

Var TaggerModel::run_branch(Tape& t, const Branch& b, Var x) {
  const Var h = nn::bilstm(t, nn::dropout(t, x, cfg_.dropout), b.lstm);
  return nn::activate(t, nn::linear(t, h, *b.proj_w, b.proj_b), nn::Activation::kTanh);
}

TaggerModel::Graph TaggerModel::forward(Tape& t, const Utterance& utt, const TaggerInputs& in) {
  if (utt.tokens.empty()) throw Error("tagger: empty utterance " + utt.id);
  Graph g;
  const std::vector<Var> pros =
      cfg_.fusion.features.prosodic() ? prosody_features(t, utt, in, &g.prosody_nll) : std::vector<Var>{};
  Var u;
  if (cfg_.fusion.mode != FusionMode::kLate) {
    std::vector<Var> parts;
    if (cfg_.fusion.features.text) parts.push_back(text_features(t, utt));
    parts.insert(parts.end(), pros.begin(), pros.end());
    const Var x = parts.size() == 1 ? parts[0] : nn::concat_cols(t, parts);
    g.text_state = run_branch(t, main_, x);
    u = g.text_state;
  } else {
    g.text_state = run_branch(t, main_, text_features(t, utt));
    const Var px = pros.size() == 1 ? pros[0] : nn::concat_cols(t, pros);
    g.prosody_state = run_branch(t, prosody_branch_, px);
    u = fuse_late(t, g.text_state, g.prosody_state, cfg_.fusion.alpha);
  }
  g.emissions = nn::linear(t, nn::dropout(t, u, cfg_.dropout), *emit_w_, emit_b_);
  return g;
}

Var TaggerModel::loss(Tape& t, const Utterance& utt, const TaggerInputs& in) {
  if (utt.labels.size() != utt.tokens.size()) throw Error("tagger: " + utt.id + " has no gold labels");
  const Graph g = forward(t, utt, in);
  std::vector<int> gold(utt.labels.size());
  for (std::size_t i = 0; i < gold.size(); ++i) gold[i] = static_cast<int>(utt.labels[i]);
  Var loss = nn::crf_nll(t, g.emissions, crf_, gold);
  if (g.prosody_nll.valid() && cfg_.fusion.lambda > 0) {
    // Mean over token-cue entries, so the weight does not grow with length.
    const double entries = static_cast<double>(utt.tokens.size() * kNumCues);
    loss = nn::add(t, loss, nn::scale(t, g.prosody_nll, cfg_.fusion.lambda / entries));
  }
  return loss;
}

std::vector<Label> TaggerModel::decode(const Utterance& utt, const TaggerInputs& in) {
  Tape t(false);
  const Graph g = forward(t, utt, in);
  const auto path = nn::crf_viterbi(t.value(g.emissions), crf_.scores());
  std::vector<Label> out(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) out[i] = static_cast<Label>(path[i]);
  return out;
}

std::vector<std::vector<Label>> TaggerModel::decode_all(const std::vector<Utterance>& utts,
                                                        const TaggerInputs& in) {
  std::vector<std::vector<Label>> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(decode(u, in));
  return out;
}

Scores TaggerModel::score(const std::vector<Utterance>& utts, const TaggerInputs& in) {
  const auto pred = decode_all(utts, in);
  std::vector<std::vector<Label>> gold;
  gold.reserve(utts.size());
  for (const auto& u : utts) gold.push_back(u.labels);
  return evaluate(pred, gold);
}

void TaggerModel::set_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  cfg_.fusion.alpha = alpha;
}

std::vector<nn::ParameterStore*> TaggerModel::trainable_stores() {
  std::vector<nn::ParameterStore*> s{&store_};
  if (prosody_ && cfg_.fusion.training == TrainingMode::kJoint) s.push_back(&prosody_->params());
  return s;
}

// ---- persistence -------------------------------------------------------

namespace {

constexpr const char* kProsodyPrefix = "predictor.";

void embed_archive(nn::ModelArchive& outer, const nn::ModelArchive& inner, const std::string& prefix) {
  outer.set(prefix + "kind", inner.kind);
  for (const auto& [k, v] : inner.config) outer.set(prefix + k, v);
  for (const auto& [k, v] : inner.vocabs) outer.vocabs[prefix + k] = v;
  for (const auto& [k, v] : inner.arrays) outer.add_array(prefix + k, v);
}

nn::ModelArchive extract_archive(const nn::ModelArchive& outer, const std::string& prefix) {
  nn::ModelArchive inner;
  inner.kind = outer.get(prefix + "kind");
  for (const auto& [k, v] : outer.config) {
    if (k.rfind(prefix, 0) == 0 && k != prefix + "kind") inner.set(k.substr(prefix.size()), v);
  }
  for (const auto& [k, v] : outer.vocabs) {
    if (k.rfind(prefix, 0) == 0) inner.vocabs[k.substr(prefix.size())] = v;
  }
  for (const auto& [k, v] : outer.arrays) {
    if (k.rfind(prefix, 0) == 0) inner.add_array(k.substr(prefix.size()), v);
  }
  return inner;
}

std::size_t get_size(const nn::ModelArchive& ar, const std::string& key) {
  return static_cast<std::size_t>(std::stoull(ar.get(key)));
}

}  // namespace

nn::ModelArchive TaggerModel::to_archive() const {
  nn::ModelArchive ar;
  ar.kind = "tagger";
  ar.set("features", cfg_.fusion.features.to_string());
  ar.set("mode", std::string(fusion_mode_name(cfg_.fusion.mode)));
  ar.set("alpha", nn::format_double(cfg_.fusion.alpha));
  ar.set("training", std::string(training_mode_name(cfg_.fusion.training)));
  ar.set("lambda", nn::format_double(cfg_.fusion.lambda));
  ar.set("text.word_match", cfg_.text.word_match ? "1" : "0");
  ar.set("text.pos_match", cfg_.text.pos_match ? "1" : "0");
  ar.set("text.max_distance", std::to_string(cfg_.text.max_distance));
  ar.set("pos_dim", std::to_string(cfg_.pos_dim));
  ar.set("identity_dim", std::to_string(cfg_.identity_dim));
  ar.set("hidden", std::to_string(cfg_.hidden));
  ar.set("prosody_hidden", std::to_string(cfg_.prosody_hidden));
  ar.set("projection", std::to_string(cfg_.projection));
  ar.set("dropout", nn::format_double(cfg_.dropout));
  ar.set("seed", std::to_string(cfg_.seed));
  ar.set("word_dim", std::to_string(word_dim_));
  ar.vocabs["words"] = words_.items();
  ar.vocabs["pos"] = pos_.items();
  if (standardizer_.fitted()) {
    ar.set("standardizer_divisor", nn::format_double(standardizer_.divisor()));
    ar.add_array("standardizer.mean", Matrix(1, kNumCues, standardizer_.mean()));
    ar.add_array("standardizer.std", Matrix(1, kNumCues, standardizer_.stddev()));
  }
  ar.add_store(store_);
  if (prosody_) embed_archive(ar, prosody_->to_archive(), kProsodyPrefix);
  return ar;
}

TaggerModel TaggerModel::from_archive(const nn::ModelArchive& ar) {
  if (ar.kind != "tagger") throw ConfigError("expected a tagger model, got kind '" + ar.kind + "'");
  TaggerModel m;
  auto& c = m.cfg_;
  c.fusion.features = FeatureSelection::parse(ar.get("features"));
  c.fusion.mode = parse_fusion_mode(ar.get("mode"));
  c.fusion.alpha = nn::parse_double(ar.get("alpha"));
  c.fusion.training = parse_training_mode(ar.get("training"));
  c.fusion.lambda = nn::parse_double(ar.get("lambda"));
  c.text.word_match = ar.get("text.word_match") == "1";
  c.text.pos_match = ar.get("text.pos_match") == "1";
  c.text.max_distance = get_size(ar, "text.max_distance");
  c.pos_dim = get_size(ar, "pos_dim");
  c.identity_dim = get_size(ar, "identity_dim");
  c.hidden = get_size(ar, "hidden");
  c.prosody_hidden = get_size(ar, "prosody_hidden");
  c.projection = get_size(ar, "projection");
  c.dropout = nn::parse_double(ar.get("dropout"));
  c.seed = std::stoull(ar.get("seed"));
  c.validate();
  m.word_dim_ = get_size(ar, "word_dim");
  m.words_ = Vocabulary(ar.vocabs.at("words"));
  m.pos_ = Vocabulary(ar.vocabs.at("pos"));
  if (ar.has("standardizer_divisor")) {
    m.standardizer_ = Standardizer(ar.array("standardizer.mean").data(), ar.array("standardizer.std").data(),
                                   nn::parse_double(ar.get("standardizer_divisor")));
  }
  if (ar.has(std::string(kProsodyPrefix) + "kind")) {
    m.prosody_ = std::make_unique<ProsodyModel>(ProsodyModel::from_archive(extract_archive(ar, kProsodyPrefix)));
    if (c.fusion.training == TrainingMode::kDisjoint) m.prosody_->params().set_frozen(true);
  }
  if (c.fusion.features.innovations && !m.prosody_) throw ConfigError("tagger archive lacks its prosody model");
  nn::Rng rng(0);
  m.build(rng, Matrix(m.words_.size() - 1, m.word_dim_));
  nn::ModelArchive own;
  for (const auto& [k, v] : ar.arrays) {
    if (k.rfind(kProsodyPrefix, 0) != 0 && k.rfind("standardizer.", 0) != 0) own.add_array(k, v);
  }
  own.load_store(m.store_);
  if (c.fusion.features.text) m.store_.get("word.table").frozen = true;
  return m;
}

void TaggerModel::save(const std::filesystem::path& path) const { nn::save_archive(to_archive(), path); }

TaggerModel TaggerModel::load(const std::filesystem::path& path) { return from_archive(nn::load_archive(path)); }

// ---- training ----------------------------------------------------------

TaggerTrainReport train_tagger(TaggerModel& model, const std::vector<Utterance>& train,
                               const std::vector<Utterance>& dev, const TaggerInputs& in) {
  if (train.empty()) throw Error("train_tagger: no training utterances");
  const TaggerConfig& cfg = model.config();
  TaggerInputs inputs = in;
  TokenTable frozen_z;
  if (cfg.fusion.features.innovations && cfg.fusion.training == TrainingMode::kDisjoint && in.innovations == nullptr) {
    // The frozen predictor never changes, so its innovations are computed once.
    if (in.raw_cues == nullptr) throw ConfigError("train_tagger: innovations need raw cues");
    frozen_z = innovation_table(*model.prosody(), train, *in.raw_cues);
    for (auto& [id, z] : innovation_table(*model.prosody(), dev, *in.raw_cues)) frozen_z.emplace(id, std::move(z));
    inputs.innovations = &frozen_z;
  }

  auto stores = model.trainable_stores();
  for (auto* s : stores) s->zero_grad();
  nn::Rng rng(cfg.seed * 0xD1B54A32D192ED03ULL + 29);
  nn::AdamConfig adam = cfg.adam;
  TaggerTrainReport report;
  report.best_dev_f1 = -1.0;
  std::vector<std::vector<Matrix>> best;
  for (auto* s : stores) best.push_back(s->snapshot());
  std::size_t stale = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t idx : order) {
      Tape t(true, &rng);
      const Var loss = model.loss(t, train[idx], inputs);
      t.backward(loss);
      nn::adam_step(stores, adam);
      total += t.value(loss)(0, 0);
    }
    adam.lr *= cfg.lr_decay;
    report.train_loss.push_back(total / static_cast<double>(train.size()));
    const double f1 = dev.empty() ? 0.0 : model.score(dev, inputs).f1;
    report.dev_f1.push_back(f1);
    if (f1 > report.best_dev_f1) {
      report.best_dev_f1 = f1;
      report.best_epoch = epoch;
      for (std::size_t i = 0; i < stores.size(); ++i) best[i] = stores[i]->snapshot();
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < stores.size(); ++i) stores[i]->restore(best[i]);
  return report;
}

std::vector<double> default_alpha_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

AlphaSearch tune_alpha(std::span<const double> grid, const std::function<double(double)>& dev_f1) {
  if (grid.empty()) throw ConfigError("tune_alpha: empty grid");
  std::vector<double> sorted(grid.begin(), grid.end());
  for (double a : sorted) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("tune_alpha: grid value outside [0,1]");
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  AlphaSearch s;
  s.best_f1 = -1.0;
  for (double a : sorted) {
    const double f = dev_f1(a);
    s.scores.emplace_back(a, f);
    if (f > s.best_f1) {
      s.best_f1 = f;
      s.best_alpha = a;
    }
  }
  return s;
}

SeedSummary summarize_seeds(std::vector<std::uint64_t> seeds, std::vector<double> f1) {
  if (seeds.size() != f1.size() || f1.empty()) throw Error("summarize_seeds: need one score per seed");
  SeedSummary s;
  s.mean = std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
  s.best = *std::max_element(f1.begin(), f1.end());
  s.seeds = std::move(seeds);
  s.f1 = std::move(f1);
  return s;
}

// ---- prediction files --------------------------------------------------

void write_predictions(const std::filesystem::path& path, const std::vector<Utterance>& utts,
                       const std::vector<std::vector<Label>>& predicted) {
  if (utts.size() != predicted.size()) throw ShapeError("write_predictions: utterance count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "utt_id\ttoken_index\tgold_label\tpred_label\n";
  for (std::size_t u = 0; u < utts.size(); ++u) {
    if (predicted[u].size() != utts[u].tokens.size() || utts[u].labels.size() != utts[u].tokens.size()) {
      throw ShapeError("write_predictions: label count mismatch for " + utts[u].id);
    }
    for (std::size_t i = 0; i < predicted[u].size(); ++i) {
      out << utts[u].id << '\t' << i << '\t' << label_name(utts[u].labels[i]) << '\t'
          << label_name(predicted[u][i]) << '\n';
    }
  }
  if (!out) throw IoError("error writing " + path.string());
}

std::vector<PredictionRow> parse_predictions(std::istream& in, const std::string& source) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("utt_id\t", 0) == 0) continue;
    const auto f = split_fields(line);
    if (f.size() != 4) throw FormatError(source, lineno, "expected 4 fields, got " + std::to_string(f.size()));
    PredictionRow r;
    r.utt_id = f[0];
    try {
      std::size_t used = 0;
      r.token_index = std::stoul(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("trailing");
      r.gold = parse_label(f[2]);
      r.predicted = parse_label(f[3]);
    } catch (const std::exception& e) {
      throw FormatError(source, lineno, std::string("bad field: ") + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return parse_predictions(in, path.string());
}

std::vector<LabeledSequence> group_predictions(const std::vector<PredictionRow>& rows) {
  std::vector<LabeledSequence> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (out.empty() || out.back().utt_id != r.utt_id || r.token_index == 0) {
      if (r.token_index != 0) {
        throw FormatError("<predictions>", k + 1, r.utt_id + " does not start at token 0");
      }
      out.push_back({r.utt_id, {}, {}});
    }
    auto& seq = out.back();
    if (r.token_index != seq.gold.size()) {
      throw FormatError("<predictions>", k + 1, r.utt_id + " token indices are not consecutive");
    }
    seq.gold.push_back(r.gold);
    seq.predicted.push_back(r.predicted);
  }
  return out;
}

}  // namespace disfl
