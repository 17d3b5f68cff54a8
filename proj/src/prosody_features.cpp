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

#include "disfl/prosody_features.hpp"

#include <cmath>
#include <string>

#include "disfl/error.hpp"

namespace disfl {

std::string_view cue_name(std::size_t k) {
  static const std::array<std::string_view, kNumCues> kNames = {
      "pause",   "duration", "nccf",  "pov_log_pitch", "delta_log_pitch", "energy_total",
      "energy_low20", "energy_high20", "mfcc0", "mfcc1", "mfcc2", "mfcc3", "mfcc4", "mfcc5",
      "mfcc6", "mfcc7", "mfcc8", "mfcc9", "mfcc10", "mfcc11", "mfcc12"};
  if (k >= kNumCues) throw Error("cue index " + std::to_string(k) + " out of range");
  return kNames[k];
}

double pause_scale(double seconds) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    throw Error("pause_scale: pause must be a finite non-negative duration");
  }
  return std::min(1.0, std::log1p(seconds));
}

nn::Matrix assemble_cues(const Utterance& utt, const nn::Matrix& word_features, AssembleStats* stats) {
  const std::size_t n = utt.tokens.size();
  if (word_features.rows() != n || word_features.cols() != dsp::kFrameColumns) {
    throw ShapeError("assemble_cues: word features must be n x 19");
  }
  nn::Matrix cues(n, kNumCues);
  double prev_end = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Token& t = utt.tokens[i];
    if (i > 0 && t.start < utt.tokens[i - 1].start) {
      throw Error("assemble_cues: token times not monotone in " + utt.id);
    }
    double gap = t.start - prev_end;
    if (gap < 0) {
      gap = 0;
      if (stats) ++stats->clamped_pauses;
    }
    cues(i, kPauseCue) = pause_scale(gap);
    cues(i, kDurationCue) = t.end - t.start;
    for (std::size_t k = 0; k < dsp::kFrameColumns; ++k) cues(i, kFirstF0Cue + k) = word_features(i, k);
    prev_end = t.end;
  }
  return cues;
}

nn::Matrix assemble_cues(const Utterance& utt, const dsp::FrameFeatures& frames, AssembleStats* stats) {
  nn::Matrix wf(utt.tokens.size(), dsp::kFrameColumns);
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    const auto avg = dsp::word_average(frames, utt.tokens[i].start, utt.tokens[i].end);
    for (std::size_t k = 0; k < dsp::kFrameColumns; ++k) wf(i, k) = avg[k];
  }
  return assemble_cues(utt, wf, stats);
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> stddev, double divisor)
    : mean_(std::move(mean)), std_(std::move(stddev)), divisor_(divisor) {
  if (mean_.size() != kNumCues || std_.size() != kNumCues) throw ShapeError("standardizer needs 21 cues");
  if (!(divisor_ > 0)) throw ConfigError("standardizer divisor must be positive");
}

Standardizer Standardizer::fit(std::span<const nn::Matrix> fluent, double divisor) {
  if (fluent.size() < 2) throw Error("standardizer: need at least 2 fluent utterances");
  std::vector<double> sum(kNumCues, 0.0);
  double count = 0;
  for (const auto& m : fluent) {
    if (m.cols() != kNumCues) throw ShapeError("standardizer: cue rows must have 21 columns");
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t k = 0; k < kNumCues; ++k) sum[k] += m(i, k);
    }
    count += static_cast<double>(m.rows());
  }
  if (count < 2) throw Error("standardizer: need at least 2 tokens");
  std::vector<double> mean(kNumCues), var(kNumCues, 0.0);
  for (std::size_t k = 0; k < kNumCues; ++k) mean[k] = sum[k] / count;
  for (const auto& m : fluent) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t k = 0; k < kNumCues; ++k) {
        const double d = m(i, k) - mean[k];
        var[k] += d * d;
      }
    }
  }
  std::vector<double> sd(kNumCues);
  for (std::size_t k = 0; k < kNumCues; ++k) {
    sd[k] = std::sqrt(var[k] / (count - 1));
    if (!(sd[k] > 0) && k >= kFirstF0Cue) {
      throw Error("standardizer: cue " + std::string(cue_name(k)) + " has zero variance");
    }
  }
  return Standardizer(std::move(mean), std::move(sd), divisor);
}

Standardizer Standardizer::fit(const std::vector<Utterance>& utts, const TokenTable& cues, double divisor) {
  std::vector<nn::Matrix> rows;
  for (const auto& u : utts) {
    if (!u.fluent()) continue;
    auto it = cues.find(u.id);
    if (it == cues.end()) throw Error("standardizer: no cues for utterance " + u.id);
    rows.push_back(it->second);
  }
  return fit(std::span<const nn::Matrix>(rows), divisor);
}

nn::Matrix Standardizer::apply(const nn::Matrix& cues) const {
  if (!fitted()) throw Error("standardizer not fitted");
  if (cues.cols() != kNumCues) throw ShapeError("standardizer: expected 21 columns");
  nn::Matrix out = cues;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t k = kFirstF0Cue; k < kNumCues; ++k) {
      out(i, k) = (cues(i, k) - mean_[k]) / (divisor_ * std_[k]);
    }
  }
  return out;
}

nn::Matrix Standardizer::inverse(const nn::Matrix& z) const {
  if (!fitted()) throw Error("standardizer not fitted");
  if (z.cols() != kNumCues) throw ShapeError("standardizer: expected 21 columns");
  nn::Matrix out = z;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t k = kFirstF0Cue; k < kNumCues; ++k) out(i, k) = z(i, k) * divisor_ * std_[k] + mean_[k];
  }
  return out;
}

TokenTable Standardizer::apply(const TokenTable& table) const {
  TokenTable out;
  for (const auto& [id, m] : table) out.emplace(id, apply(m));
  return out;
}

}  // namespace disfl
