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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/embeddings.hpp"
#include "disfl/labels.hpp"
#include "disfl/nn/archive.hpp"
#include "disfl/nn/crf.hpp"
#include "disfl/nn/optim.hpp"
#include "disfl/nn/tape.hpp"
#include "disfl/prosody_features.hpp"
#include "disfl/prosody_predictor.hpp"
#include "disfl/vocab.hpp"

namespace disfl {

struct FeatureSelection {
  bool text = false;
  bool raw = false;
  bool innovations = false;

  // Comma list over {text, raw, innovations}; throws ConfigError.
  static FeatureSelection parse(std::string_view csv);
  std::string to_string() const;
  std::size_t count() const { return std::size_t{text} + std::size_t{raw} + std::size_t{innovations}; }
  bool prosodic() const { return raw || innovations; }
};

enum class FusionMode { kSingle, kEarly, kLate };
enum class TrainingMode { kJoint, kDisjoint };

FusionMode parse_fusion_mode(std::string_view s);
std::string_view fusion_mode_name(FusionMode m);
TrainingMode parse_training_mode(std::string_view s);
std::string_view training_mode_name(TrainingMode m);

struct FusionConfig {
  FeatureSelection features{true, false, false};
  FusionMode mode = FusionMode::kSingle;
  // Weight of the prosody branch in late fusion.
  double alpha = 0.5;
  TrainingMode training = TrainingMode::kJoint;
  // Weight of the prosody NLL in joint training.
  double lambda = 1.0;

  // Single needs exactly one feature set, early at least two, late text plus
  // at least one prosodic set.
  void validate() const;
};

// Concatenation at the tagger input. Throws ShapeError on a row mismatch.
nn::Matrix fuse_early(const nn::Matrix& text, std::span<const nn::Matrix> prosody);
// alpha * prosody + (1 - alpha) * text. Throws ConfigError for alpha outside
// [0,1] and ShapeError on a shape mismatch.
nn::Matrix fuse_late(const nn::Matrix& text, const nn::Matrix& prosody, double alpha);
nn::Var fuse_late(nn::Tape& t, nn::Var text, nn::Var prosody, double alpha);

// Binary lexical match features appended to the word-level text inputs.
struct TextFeatureConfig {
  bool word_match = true;
  bool pos_match = true;
  std::size_t max_distance = 4;

  std::size_t dims() const;
  std::string to_string() const;
};

// Per distance d = 1..max_distance: [word(i) == word(i+d), word(i) == word(i-d),
// pos(i) == pos(i+d), pos(i) == pos(i-d)], keeping the enabled kinds.
nn::Matrix match_features(const Utterance& utt, const TextFeatureConfig& cfg);

struct TaggerConfig {
  FusionConfig fusion;
  TextFeatureConfig text;
  std::size_t pos_dim = 16;
  std::size_t identity_dim = 8;
  // BiLSTM size of the text branch (and of the only branch in single/early).
  std::size_t hidden = 64;
  // BiLSTM size of the late-fusion prosody branch.
  std::size_t prosody_hidden = 32;
  // Both branches project to this size before interpolation.
  std::size_t projection = 128;
  double dropout = 0.0;
  std::size_t epochs = 10;
  std::size_t patience = 3;
  nn::AdamConfig adam{};
  double lr_decay = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
};

// Per-utterance cue tables keyed by utterance id.
struct TaggerInputs {
  // Raw cues; needed for the raw set and for innovations from a live model.
  const TokenTable* raw_cues = nullptr;
  // Precomputed innovations; used instead of the frozen model in disjoint mode.
  const TokenTable* innovations = nullptr;
};

struct Scores {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Scores from counts. Both sets empty gives 1/1/1; exactly one empty gives 0.
Scores make_scores(std::size_t tp, std::size_t predicted, std::size_t gold);
// Token-level reparandum scores pooled over the corpus. Throws ShapeError on
// a length mismatch.
Scores evaluate(std::span<const std::vector<Label>> predicted, std::span<const std::vector<Label>> gold);
Scores evaluate_sets(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold);
// Token indices labelled as reparandum.
std::vector<std::size_t> reparandum_set(std::span<const Label> labels);

// Legal-transition mask (1 allowed) and legal start labels for the CRF.
nn::Matrix bio_transition_mask();
std::array<bool, kNumLabels> bio_start_mask();

class TaggerModel {
 public:
  // `prosody` is required when innovations are used: joint mode fine-tunes a
  // copy of it, disjoint mode keeps it frozen. Throws ConfigError otherwise.
  static TaggerModel create(const TaggerConfig& cfg, const std::vector<Utterance>& train,
                            const Embeddings& embeddings, Standardizer standardizer,
                            const ProsodyModel* prosody);

  TaggerModel(TaggerModel&&) = default;
  TaggerModel& operator=(TaggerModel&&) = default;

  struct Graph {
    nn::Var emissions;     // n x 7
    nn::Var text_state;    // projected text branch (late) or the only branch
    nn::Var prosody_state; // projected prosody branch (late only)
    nn::Var prosody_nll;   // joint mode on fluent utterances only
  };

  Graph forward(nn::Tape& t, const Utterance& utt, const TaggerInputs& in);
  // crf_nll + lambda * prosody_nll.
  nn::Var loss(nn::Tape& t, const Utterance& utt, const TaggerInputs& in);

  std::vector<Label> decode(const Utterance& utt, const TaggerInputs& in);
  std::vector<std::vector<Label>> decode_all(const std::vector<Utterance>& utts, const TaggerInputs& in);
  Scores score(const std::vector<Utterance>& utts, const TaggerInputs& in);

  // Input blocks, exposed for inspection.
  nn::Var text_features(nn::Tape& t, const Utterance& utt);
  std::size_t text_feature_dim() const;
  std::size_t input_dim() const;

  const TaggerConfig& config() const { return cfg_; }
  void set_alpha(double alpha);
  double alpha() const { return cfg_.fusion.alpha; }
  const Standardizer& standardizer() const { return standardizer_; }
  nn::ParameterStore& params() { return store_; }
  // Stores updated by the optimizer: the tagger, plus the prosody model in
  // joint mode.
  std::vector<nn::ParameterStore*> trainable_stores();
  ProsodyModel* prosody() { return prosody_.get(); }

  nn::ModelArchive to_archive() const;
  static TaggerModel from_archive(const nn::ModelArchive& ar);
  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path);

 private:
  TaggerModel() = default;
  struct Branch {
    nn::BiLstmParams lstm;
    nn::Parameter* proj_w = nullptr;
    nn::Parameter* proj_b = nullptr;
  };
  void build(nn::Rng& rng, const nn::Matrix& word_vectors);
  void bind();
  Branch add_branch(const std::string& prefix, std::size_t input, std::size_t hidden, nn::Rng& rng);
  Branch find_branch(const std::string& prefix);
  nn::Var run_branch(nn::Tape& t, const Branch& b, nn::Var x);
  // Raw and innovation blocks in that order; innovations from the live model
  // in joint mode also yield the prosody NLL.
  std::vector<nn::Var> prosody_features(nn::Tape& t, const Utterance& utt, const TaggerInputs& in,
                                        nn::Var* nll);
  std::size_t prosody_feature_dim() const;

  TaggerConfig cfg_;
  Standardizer standardizer_;
  Vocabulary words_, pos_;
  std::size_t word_dim_ = 0;
  nn::ParameterStore store_;
  WordTable word_;
  nn::Parameter* pos_emb_ = nullptr;
  nn::Parameter* id_emb_ = nullptr;
  Branch main_, prosody_branch_;
  nn::Parameter* emit_w_ = nullptr;
  nn::Parameter* emit_b_ = nullptr;
  nn::CrfParams crf_;
  std::unique_ptr<ProsodyModel> prosody_;
};

struct TaggerTrainReport {
  std::vector<double> train_loss;  // per epoch, mean per utterance
  std::vector<double> dev_f1;      // per epoch
  std::size_t best_epoch = 0;
  double best_dev_f1 = 0.0;
};

// Early stopping on dev reparandum F1; the best snapshot is restored.
TaggerTrainReport train_tagger(TaggerModel& model, const std::vector<Utterance>& train,
                               const std::vector<Utterance>& dev, const TaggerInputs& in);

struct AlphaSearch {
  double best_alpha = 0.0;
  double best_f1 = 0.0;
  std::vector<std::pair<double, double>> scores;  // (alpha, dev F1)
};

std::vector<double> default_alpha_grid();
// Maximizes `dev_f1` over `grid`; ties go to the smaller alpha. Throws
// ConfigError on an empty grid or a value outside [0,1].
AlphaSearch tune_alpha(std::span<const double> grid, const std::function<double(double)>& dev_f1);

// Mean and best of per-seed scores.
struct SeedSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> f1;
  double mean = 0.0;
  double best = 0.0;
};
SeedSummary summarize_seeds(std::vector<std::uint64_t> seeds, std::vector<double> f1);

// `utt_id token_index gold_label pred_label` rows with a header.
struct PredictionRow {
  std::string utt_id;
  std::size_t token_index = 0;
  Label gold = Label::kO;
  Label predicted = Label::kO;
};
void write_predictions(const std::filesystem::path& path, const std::vector<Utterance>& utts,
                       const std::vector<std::vector<Label>>& predicted);
std::vector<PredictionRow> parse_predictions(std::istream& in, const std::string& source);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

// Per-utterance gold and predicted sequences in file order.
struct LabeledSequence {
  std::string utt_id;
  std::vector<Label> gold;
  std::vector<Label> predicted;
};
// Throws FormatError when token indices are not consecutive from 0.
std::vector<LabeledSequence> group_predictions(const std::vector<PredictionRow>& rows);

}  // namespace disfl
