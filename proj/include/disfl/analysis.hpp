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
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/labels.hpp"
#include "disfl/tagger.hpp"

namespace disfl {

struct RecallCell {
  std::size_t tokens = 0;
  std::size_t correct = 0;
  // correct / tokens; 0 for an empty cell.
  double recall() const;
};

struct BreakdownReport {
  std::map<std::pair<DisfluencyKind, LengthBucket>, RecallCell> by_kind_length;
  std::map<DisfluencyKind, RecallCell> by_kind;
  // Rephrase tokens only, split by reparandum length.
  std::map<std::pair<WordClass, LengthBucket>, RecallCell> by_word_class;
  RecallCell total;
  // Tokens of fluent repetitions; `correct` counts the falsely flagged ones.
  RecallCell fluent_repetition;

  double fluent_repetition_fp_rate() const { return fluent_repetition.recall(); }
  // Share of rephrase tokens in one word-class cell within its length bucket.
  double word_class_share(WordClass w, LengthBucket b) const;
};

// Category of every gold reparandum token, or nullopt outside reparanda. A
// token whose innermost span is a repetition counts as repetition; any other
// token takes the category of its outermost span.
std::vector<std::optional<DisfluencyCategory>> token_categories(const Utterance& utt);

// Adjacent identical n-grams (n <= 2) outside every gold span, compared on
// lower-cased surfaces after removing filled pauses and discourse markers.
// Returns a mask over tokens covering both copies.
std::vector<bool> fluent_repetition_mask(const Utterance& utt);

// Throws ShapeError when predictions do not match the corpus.
BreakdownReport breakdown(const std::vector<Utterance>& gold, const std::vector<std::vector<Label>>& predicted);

// Predictions from a file, ordered like `corpus`. Throws Error on missing or
// extra utterances and ShapeError on length mismatches.
std::vector<std::vector<Label>> align_predictions(const std::vector<Utterance>& corpus,
                                                  const std::vector<LabeledSequence>& predictions);

void write_breakdown_tsv(const std::filesystem::path& path, const BreakdownReport& r);
std::string render_breakdown(const BreakdownReport& r);

// ---- innovation histograms ----------------------------------------------

inline constexpr double kHistogramLow = -6.0;
inline constexpr double kHistogramHigh = 6.0;
inline constexpr double kHistogramWidth = 0.25;
// 48 interior bins plus an underflow and an overflow bin.
inline constexpr std::size_t kHistogramBins = 50;

// Bin of z: 0 is (-inf, -6), 49 is [6, inf).
std::size_t histogram_bin(double z);

struct HistogramGroup {
  std::size_t count = 0;
  double mean = 0.0;
  std::array<double, kHistogramBins> mass{};  // sums to 1 when count > 0
};

struct InnovationHistogram {
  std::size_t cue = 0;
  HistogramGroup pre_ip;  // tokens immediately before an interruption point
  HistogramGroup fluent;  // tokens of utterances without disfluencies
};

// Throws Error for a cue index >= 21 and when an utterance has no row.
InnovationHistogram innovation_histogram(const TokenTable& innovations, const std::vector<Utterance>& gold,
                                         std::size_t cue);
void write_histogram_tsv(const std::filesystem::path& path, const InnovationHistogram& h);

// ---- model comparison ----------------------------------------------------

struct SentenceDiff {
  std::string utt_id;
  std::size_t errors_a = 0;
  std::size_t errors_b = 0;
  std::string rendering;
};

struct ModelDiff {
  std::vector<SentenceDiff> a_better;
  std::vector<SentenceDiff> b_better;
};

// Token errors are reparandum-membership disagreements with gold. Throws
// Error when the prediction sets cover different utterances or lengths.
std::size_t sentence_errors(std::span<const Label> predicted, std::span<const Label> gold);
ModelDiff model_diff(const std::vector<LabeledSequence>& a, const std::vector<LabeledSequence>& b,
                     const std::vector<Utterance>& gold);
std::string render_model_diff(const ModelDiff& d);

}  // namespace disfl
