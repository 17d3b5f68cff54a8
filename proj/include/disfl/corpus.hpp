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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "disfl/labels.hpp"

namespace disfl {

enum class Stress { kNone = 0, kPrimary = 1, kSecondary = 2 };

struct Phone {
  std::string label;
  Stress stress = Stress::kNone;
  friend bool operator==(const Phone&, const Phone&) = default;
};

struct Token {
  std::string surface;
  std::string pos;
  bool is_filled_pause = false;
  bool is_discourse_marker = false;
  bool is_fragment = false;
  std::vector<Phone> phones;
  double start = 0.0;
  double end = 0.0;
  friend bool operator==(const Token&, const Token&) = default;
};

// Half-open token index range [begin, end).
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

// reparandum + interruption point, optional interregnum, optional repair.
// Absent parts are nullopt, never empty ranges.
struct DisfluencySpan {
  TokenRange reparandum;
  std::optional<TokenRange> interregnum;
  std::optional<TokenRange> repair;
  int nesting_depth = 0;

  // Last token index covered by the span (exclusive).
  std::size_t end() const;
  // Index of the word immediately preceding the interruption point.
  std::size_t pre_ip_token() const { return reparandum.end - 1; }
  friend bool operator==(const DisfluencySpan&, const DisfluencySpan&) = default;
};

struct Utterance {
  std::string id;
  std::vector<Token> tokens;
  // Pre-order by opening bracket position.
  std::vector<DisfluencySpan> spans;
  std::vector<Label> labels;

  std::size_t size() const { return tokens.size(); }
  // True when no span is annotated and no token is labelled.
  bool fluent() const;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Tokenization and identity-feature conventions.
struct MarkupOptions {
  bool drop_fragments = false;
  bool strip_punctuation = true;
  bool split_contractions = false;
  // Lower-cased single-token fillers.
  std::vector<std::string> filled_pauses = {"uh", "um"};
  // Lower-cased discourse markers; multiword entries use '_' and are merged
  // from adjacent tokens during tokenization.
  std::vector<std::string> discourse_markers = {"you_know", "i_mean", "well", "like", "so"};
};

// Parses `[ reparandum + { interregnum } repair ]` markup. Tokens may carry a
// POS tag as `word/TAG`. Throws ParseError with a character offset.
Utterance parse_markup(std::string_view line, const MarkupOptions& opts = {});
std::string render_markup(const Utterance& utt);

// BIO labels from the span structure: a token inside any reparandum and any
// repair is BOTH; interregnum tokens are O unless an enclosing span covers them.
std::vector<Label> derive_labels(const Utterance& utt);

// Recomputes identity flags from the surface form.
void apply_identity_flags(Token& tok, const MarkupOptions& opts);

enum class DisfluencyKind { kRepetition, kRephrase, kRestart, kNested };
enum class LengthBucket { k1to2, k3to5, k6to8, k9plus };
enum class WordClass { kContentContent, kContentFunction, kFunctionFunction };

struct DisfluencyCategory {
  DisfluencyKind kind = DisfluencyKind::kRephrase;
  LengthBucket reparandum_length = LengthBucket::k1to2;
  WordClass word_class = WordClass::kFunctionFunction;
  friend bool operator==(const DisfluencyCategory&, const DisfluencyCategory&) = default;
};

std::string_view kind_name(DisfluencyKind k);
std::string_view bucket_name(LengthBucket b);
std::string_view word_class_name(WordClass w);
LengthBucket length_bucket(std::size_t reparandum_tokens);

// Nouns, non-auxiliary verbs, adjectives and adverbs (Penn tags).
bool is_content_word(const Token& tok);

// Restart when the repair is absent; repetition when the reparandum (minus
// fragments) equals the repair prefix; nested when it contains another span;
// rephrase otherwise.
DisfluencyCategory categorize(const DisfluencySpan& span, const Utterance& utt);

// ---- alignment ---------------------------------------------------------

enum class EditOp { kMatch, kSubstitute, kInsert, kDelete };

struct AlignedPair {
  EditOp op;
  std::optional<std::size_t> original;   // absent for insertions
  std::optional<std::size_t> corrected;  // absent for deletions
};

// Minimum edit distance alignment (costs 0/1/1/1) compared on lower-cased
// surfaces; ties prefer match > substitute > delete > insert.
std::vector<AlignedPair> align_tokens(std::span<const std::string> original,
                                      std::span<const std::string> corrected);
std::vector<AlignedPair> align_tokens(std::span<const Token> original,
                                      std::span<const Token> corrected);
std::size_t edit_cost(std::span<const AlignedPair> alignment);

using LabelPredictor = std::function<std::vector<Label>(const Utterance&)>;

// Silver annotation: matched tokens keep their original labels, tokens in
// corrected regions take the predictor's labels, then BIO is repaired.
// Throws Error if `corrected` is empty.
Utterance silver_remap(const Utterance& original, std::vector<Token> corrected,
                       const LabelPredictor& predictor, std::string id = {});

// ---- lexicon -----------------------------------------------------------

class Lexicon {
 public:
  void add(std::string word, std::vector<Phone> phones);
  // Lower-cased lookup; OOV returns {UNK/none}.
  std::vector<Phone> lookup(std::string_view word) const;
  bool contains(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<std::string, std::vector<Phone>>& entries() const { return entries_; }

 private:
  std::unordered_map<std::string, std::vector<Phone>> entries_;
};

inline constexpr std::string_view kUnknownPhone = "UNK";

// `word<ws>PH1 PH2 ...`; vowels carry 0/1/2 stress digits. Lines starting with
// ';;;' are comments. Throws FormatError with the line number.
Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(std::istream& in, const std::string& source);
void save_lexicon(const Lexicon& lex, const std::filesystem::path& path);
Phone parse_phone(std::string_view text);
std::string render_phone(const Phone& p);

// Fills token phones from the lexicon (merged markers fall back to their
// parts, fragments to their stem).
void resolve_phones(Utterance& utt, const Lexicon& lex);

std::string to_lower(std::string_view s);

}  // namespace disfl
