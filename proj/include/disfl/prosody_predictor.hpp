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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/embeddings.hpp"
#include "disfl/nn/archive.hpp"
#include "disfl/nn/optim.hpp"
#include "disfl/nn/tape.hpp"
#include "disfl/prosody_features.hpp"
#include "disfl/vocab.hpp"

namespace disfl {

struct ProsodyConfig {
  std::size_t word_hidden = 128;
  std::size_t phone_hidden = 64;
  std::size_t pos_dim = 16;
  std::size_t identity_dim = 8;
  std::size_t phone_dim = 32;
  std::size_t stress_dim = 4;
  double dropout = 0.0;
  std::size_t epochs = 20;
  std::size_t patience = 4;
  nn::AdamConfig adam{};
  // Utterances per optimizer step.
  std::size_t batch_size = 1;
  // Learning rate multiplier applied after every epoch.
  double lr_decay = 0.9;
  double standardizer_divisor = 3.0;
  std::uint64_t seed = 1;
  // Mean activation per cue: softplus for pause and duration, tanh otherwise.
  std::vector<nn::Activation> mean_activation = default_mean_activation();

  static std::vector<nn::Activation> default_mean_activation();
  void validate() const;
};

// Identity category of a token: plain, filled pause, discourse marker, fragment.
int identity_category(const Token& tok);
inline constexpr std::size_t kIdentityCategories = 4;

// Index form of an utterance for the text encoders.
struct TextIds {
  std::vector<int> word;  // -1 for words without a pretrained vector
  std::vector<int> pos;
  std::vector<int> identity;
  std::vector<int> phone;
  std::vector<int> stress;
  std::vector<std::size_t> phone_token;  // token index of each phone
  std::vector<std::size_t> first_phone;  // per token
  std::vector<std::size_t> last_phone;   // per token
};

// Frozen pretrained vectors plus one trainable row for unknown words.
struct WordTable {
  nn::Parameter* table = nullptr;  // frozen, V x d
  nn::Parameter* unk = nullptr;    // 1 x d
};
nn::Var word_lookup(nn::Tape& t, const WordTable& w, std::span<const int> ids);

struct PredictedCues {
  nn::Matrix mean;      // n x 21
  nn::Matrix variance;  // n x 21, strictly positive
};

// z = (observed − μ) / sqrt(σ²), elementwise.
nn::Matrix compute_innovations(const nn::Matrix& observed, const PredictedCues& d);
double innovation(double observed, double mean, double variance);

class ProsodyModel {
 public:
  // Builds vocabularies from `train` (POS tags and phones) and initializes
  // parameters from config.seed.
  static ProsodyModel create(const ProsodyConfig& cfg, const std::vector<Utterance>& train,
                             const Embeddings& embeddings, Standardizer standardizer);

  struct Graph {
    nn::Var g;     // word-level states, n x 2Hw
    nn::Var h;     // token summaries, n x 2Hp
    nn::Var mean;  // n x 21
    nn::Var var;   // n x 21
  };

  TextIds ids(const Utterance& utt) const;
  // Word-level encoder input x_i = [word, POS, identity] embeddings.
  nn::Var text_inputs(nn::Tape& t, const TextIds& ids);
  Graph forward(nn::Tape& t, const Utterance& utt);
  // Sum of the Gaussian NLL over all tokens and cues (standardized targets).
  nn::Var nll(nn::Tape& t, const Graph& g, const nn::Matrix& standardized);

  PredictedCues predict(const Utterance& utt);
  // Innovations for raw (unstandardized) cues.
  nn::Matrix innovations(const Utterance& utt, const nn::Matrix& raw_cues);
  double mean_nll(const std::vector<const Utterance*>& utts, const TokenTable& raw_cues);

  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const ProsodyConfig& config() const { return cfg_; }
  const Standardizer& standardizer() const { return standardizer_; }
  std::size_t text_input_dim() const;

  nn::ModelArchive to_archive() const;
  static ProsodyModel from_archive(const nn::ModelArchive& ar);
  void save(const std::filesystem::path& path) const;
  static ProsodyModel load(const std::filesystem::path& path);

 private:
  ProsodyModel() = default;
  void build(nn::Rng& rng, const nn::Matrix& word_vectors);
  void bind();

  ProsodyConfig cfg_;
  Standardizer standardizer_;
  Vocabulary words_, pos_, phones_;
  std::size_t word_dim_ = 0;
  nn::ParameterStore store_;
  WordTable word_;
  nn::Parameter* pos_emb_ = nullptr;
  nn::Parameter* id_emb_ = nullptr;
  nn::Parameter* phone_emb_ = nullptr;
  nn::Parameter* stress_emb_ = nullptr;
  nn::BiLstmParams word_lstm_;
  nn::LstmParams phone_fwd_, phone_bwd_;
  nn::Parameter *w_mean_ = nullptr, *b_mean_ = nullptr, *w_var_ = nullptr, *b_var_ = nullptr;
};

struct ProsodyTrainReport {
  double initial_dev_nll = 0.0;
  std::vector<double> train_nll;  // per epoch, mean per token
  std::vector<double> dev_nll;    // per epoch, mean per token
  std::size_t best_epoch = 0;     // 0 = initialization
  double best_dev_nll = 0.0;
  std::size_t fluent_train = 0;
};

// Trains on the fluent utterances of `train`; early stopping on the mean dev
// NLL of the fluent dev utterances. Throws Error if `train` has none.
ProsodyTrainReport train_prosody(ProsodyModel& model, const std::vector<Utterance>& train,
                                 const std::vector<Utterance>& dev, const TokenTable& raw_cues);

// Innovation table for every utterance (rows of `raw_cues`).
TokenTable innovation_table(ProsodyModel& model, const std::vector<Utterance>& utts,
                            const TokenTable& raw_cues);

}  // namespace disfl
