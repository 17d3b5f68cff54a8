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
#include <string>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/embeddings.hpp"

namespace disfl {

// Synthetic corpus with gold spans and audio-free cue vectors.
struct SynthConfig {
  std::size_t train = 2000;
  std::size_t dev = 400;
  std::size_t test = 400;
  // Probability that an utterance carries a disfluency.
  double disfluency_rate = 0.45;
  // Relative mix of disfluency kinds (normalized; each in [0,1]).
  double repetition = 0.35;
  double rephrase = 0.20;
  double restart = 0.35;
  double nested = 0.10;
  double interregnum_rate = 0.15;
  // Fluent utterances opening with a short lead chunk; restarts abandon a
  // chunk from the same distribution, so they are ambiguous in text.
  double lead_rate = 0.35;
  // Intentional single-word repetitions with ordinary prosody.
  double fluent_repetition_rate = 0.12;
  // Filled pauses inside fluent speech.
  double filler_rate = 0.08;
  // Shift, in cue noise standard deviations, applied at the word before an
  // interruption point: duration and pause up, the three energy cues down.
  double delta = 2.0;
  std::size_t nouns = 60;
  std::size_t verbs = 30;
  std::size_t adjectives = 25;
  std::size_t adverbs = 10;
  std::size_t embedding_dim = 16;
  double embedding_noise = 0.5;
  // Also emit per-utterance frame files (constant frames per word).
  bool write_frames = false;

  // Throws ConfigError when a rate lies outside [0,1] or sizes are invalid.
  void validate() const;
};

struct SynthCorpus {
  std::vector<Utterance> train, dev, test;
  Lexicon lexicon;
  Embeddings embeddings;
  // Observed cue vectors (n x 21), quantized to 6 decimals.
  TokenTable cues;
  // Noise-free conditional means before the interruption-point shift.
  TokenTable cue_means;
  // Noise standard deviation per cue.
  std::vector<double> cue_noise;
};

SynthCorpus synth_generate(std::uint64_t seed, const SynthConfig& config);

// Writes train/dev/test transcripts and alignments, cues.tsv, lexicon.txt,
// embeddings.txt and, if requested, frames/<utt_id>.tsv.
void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir,
                        bool write_frames);

}  // namespace disfl
