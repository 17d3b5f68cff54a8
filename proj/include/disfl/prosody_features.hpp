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
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/dsp.hpp"
#include "disfl/nn/matrix.hpp"

namespace disfl {

// Cue layout, fixed everywhere: 0 pause, 1 duration, 2-4 F0 (nccf, pov log
// pitch, delta log pitch), 5-7 energy (total, low 20 bands, high 20 bands),
// 8-20 MFCC c0..c12. Cues 2-20 follow the frame-feature column order.
inline constexpr std::size_t kNumCues = 21;
inline constexpr std::size_t kPauseCue = 0;
inline constexpr std::size_t kDurationCue = 1;
inline constexpr std::size_t kFirstF0Cue = 2;
inline constexpr std::size_t kFirstEnergyCue = 5;
inline constexpr std::size_t kFirstMfccCue = 8;
inline constexpr std::size_t kNumMfcc = 13;

std::string_view cue_name(std::size_t k);

// min(1, ln(1 + r)); throws Error for negative or non-finite r.
double pause_scale(double seconds);

struct AssembleStats {
  std::size_t clamped_pauses = 0;  // overlapping alignments
};

// n x 21 cue matrix from token times and frame features.
nn::Matrix assemble_cues(const Utterance& utt, const dsp::FrameFeatures& frames,
                         AssembleStats* stats = nullptr);
// Cues 0-1 only; columns 2-20 are taken from `word_features` (n x 19).
nn::Matrix assemble_cues(const Utterance& utt, const nn::Matrix& word_features,
                         AssembleStats* stats = nullptr);

// Per-cue standardization of the tanh-headed cues (2-20):
// (x − mean) / (divisor · std). Pause and duration pass through.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> stddev, double divisor);

  // Fits on the fluent utterances among `utts` (cue rows looked up by id).
  // Throws Error with fewer than 2 fluent utterances or a zero-variance cue.
  static Standardizer fit(const std::vector<Utterance>& utts, const TokenTable& cues,
                          double divisor = 3.0);
  static Standardizer fit(std::span<const nn::Matrix> fluent_cues, double divisor = 3.0);

  nn::Matrix apply(const nn::Matrix& cues) const;
  nn::Matrix inverse(const nn::Matrix& standardized) const;
  TokenTable apply(const TokenTable& table) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }
  double divisor() const { return divisor_; }
  bool fitted() const { return !mean_.empty(); }

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
  double divisor_ = 3.0;
};

}  // namespace disfl
