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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/nn/matrix.hpp"

namespace disfl {

// Transcript file: `utt_id TAB markup`, one utterance per line. Blank lines
// and lines starting with '#' are skipped.
std::vector<Utterance> parse_transcripts(std::istream& in, const std::string& source,
                                         const MarkupOptions& opts = {});
std::vector<Utterance> read_transcripts(const std::filesystem::path& path,
                                        const MarkupOptions& opts = {});
void write_transcripts(const std::filesystem::path& path, const std::vector<Utterance>& utts);

// Alignment file: `utt_id token_index word start_s end_s`. Applies times to
// the matching tokens; every token of every utterance must be covered.
void read_alignments(const std::filesystem::path& path, std::vector<Utterance>& utts);
void parse_alignments(std::istream& in, const std::string& source, std::vector<Utterance>& utts);
void write_alignments(const std::filesystem::path& path, const std::vector<Utterance>& utts);

// Per-token real-valued table keyed by utterance id (n_tokens x cols); used
// for cue and innovation files: `utt_id token_index v_0 ... v_{cols-1}`.
using TokenTable = std::map<std::string, nn::Matrix>;

TokenTable parse_token_table(std::istream& in, const std::string& source, std::size_t cols);
TokenTable read_token_table(const std::filesystem::path& path, std::size_t cols);
// `prefix` names the value columns in the header (prefix_0, prefix_1, ...).
void write_token_table(const std::filesystem::path& path, const TokenTable& table,
                       const std::string& prefix);

// Rounds to 6 decimals, the precision of every interchange file, so values
// survive a write/read cycle bit-exactly.
double quantize6(double x);
std::string format_fixed6(double x);

// Shorthand used by readers: splits on tabs (or runs of spaces when no tab).
std::vector<std::string> split_fields(const std::string& line);

}  // namespace disfl
