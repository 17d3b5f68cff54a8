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

#include "disfl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "disfl/error.hpp"

namespace disfl {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t DisfluencySpan::end() const {
  if (repair) return repair->end;
  if (interregnum) return interregnum->end;
  return reparandum.end;
}

bool Utterance::fluent() const {
  if (!spans.empty()) return false;
  return std::none_of(labels.begin(), labels.end(), [](Label l) { return l != Label::kO; });
}

// ---- tokenization ------------------------------------------------------

namespace {

enum class SymKind { kWord, kOpen, kClose, kPlus, kLBrace, kRBrace };

struct Sym {
  SymKind kind;
  std::string text;
  std::string pos;
  std::size_t offset;
};

bool is_structural(char c) { return c == '[' || c == ']' || c == '+' || c == '{' || c == '}'; }

bool is_punct(char c) {
  return c == ',' || c == '.' || c == '?' || c == '!' || c == ';' || c == ':' || c == '"';
}

bool looks_like_tag(std::string_view t) {
  if (t.empty()) return false;
  return std::all_of(t.begin(), t.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '$' || c == '_';
  });
}

std::vector<std::string> split_contraction(const std::string& word) {
  static const char* kSuffixes[] = {"n't", "'s", "'re", "'ve", "'ll", "'d", "'m"};
  const std::string lw = to_lower(word);
  for (const char* suf : kSuffixes) {
    const std::string s(suf);
    if (lw.size() > s.size() && lw.compare(lw.size() - s.size(), s.size(), s) == 0) {
      return {word.substr(0, word.size() - s.size()), word.substr(word.size() - s.size())};
    }
  }
  return {word};
}

std::vector<Sym> tokenize(std::string_view line, const MarkupOptions& opts) {
  std::vector<Sym> raw;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_structural(c)) {
      SymKind k = c == '[' ? SymKind::kOpen
                  : c == ']' ? SymKind::kClose
                  : c == '+' ? SymKind::kPlus
                  : c == '{' ? SymKind::kLBrace
                             : SymKind::kRBrace;
      raw.push_back({k, std::string(1, c), {}, i});
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           !is_structural(line[i])) {
      ++i;
    }
    std::string word(line.substr(start, i - start));
    std::string pos;
    const auto slash = word.rfind('/');
    if (slash != std::string::npos && slash > 0 && looks_like_tag(std::string_view(word).substr(slash + 1))) {
      pos = word.substr(slash + 1);
      word.resize(slash);
    }
    if (opts.strip_punctuation) {
      while (!word.empty() && is_punct(word.back())) word.pop_back();
      std::size_t lead = 0;
      while (lead < word.size() && is_punct(word[lead])) ++lead;
      word.erase(0, lead);
      if (word.empty()) continue;
    }
    if (opts.split_contractions) {
      for (auto& part : split_contraction(word)) raw.push_back({SymKind::kWord, part, pos, start});
    } else {
      raw.push_back({SymKind::kWord, word, pos, start});
    }
  }

  // Merge multiword discourse markers from adjacent words.
  std::set<std::string> markers(opts.discourse_markers.begin(), opts.discourse_markers.end());
  std::vector<Sym> merged;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw[k].kind == SymKind::kWord && k + 1 < raw.size() && raw[k + 1].kind == SymKind::kWord &&
        markers.count(to_lower(raw[k].text) + "_" + to_lower(raw[k + 1].text)) != 0) {
      Sym s = raw[k];
      s.text = raw[k].text + "_" + raw[k + 1].text;
      if (!raw[k].pos.empty() || !raw[k + 1].pos.empty()) s.pos = "UH";
      merged.push_back(std::move(s));
      ++k;
      continue;
    }
    merged.push_back(raw[k]);
  }
  if (opts.drop_fragments) {
    std::erase_if(merged, [](const Sym& s) {
      return s.kind == SymKind::kWord && s.text.size() > 1 && s.text.back() == '-';
    });
  }
  return merged;
}

class MarkupParser {
 public:
  MarkupParser(std::vector<Sym> syms, const MarkupOptions& opts)
      : syms_(std::move(syms)), opts_(opts) {}

  Utterance run() {
    while (pos_ < syms_.size()) {
      const Sym& s = syms_[pos_];
      switch (s.kind) {
        case SymKind::kPlus: throw ParseError("'+' outside brackets", s.offset);
        case SymKind::kClose: throw ParseError("unbalanced ']'", s.offset);
        case SymKind::kRBrace: throw ParseError("unbalanced '}'", s.offset);
        default: item(0);
      }
    }
    return std::move(utt_);
  }

 private:
  void word(const Sym& s) {
    Token t;
    t.surface = s.text;
    t.pos = s.pos;
    apply_identity_flags(t, opts_);
    utt_.tokens.push_back(std::move(t));
  }

  // One word, bracketed span, or free-standing brace group.
  void item(int depth) {
    const Sym& s = syms_[pos_];
    if (s.kind == SymKind::kWord) {
      word(s);
      ++pos_;
    } else if (s.kind == SymKind::kOpen) {
      span(depth);
    } else if (s.kind == SymKind::kLBrace) {
      braces();
    }
  }

  TokenRange braces() {
    const std::size_t open = syms_[pos_].offset;
    ++pos_;
    const std::size_t begin = utt_.tokens.size();
    while (true) {
      if (pos_ >= syms_.size()) throw ParseError("unbalanced '{'", open);
      const Sym& s = syms_[pos_];
      if (s.kind == SymKind::kRBrace) break;
      if (s.kind != SymKind::kWord) throw ParseError("unexpected '" + s.text + "' inside braces", s.offset);
      word(s);
      ++pos_;
    }
    ++pos_;
    return {begin, utt_.tokens.size()};
  }

  void span(int depth) {
    const std::size_t open = syms_[pos_].offset;
    ++pos_;
    const std::size_t index = utt_.spans.size();
    utt_.spans.emplace_back();
    utt_.spans[index].nesting_depth = depth;
    const std::size_t rm_begin = utt_.tokens.size();
    while (true) {
      if (pos_ >= syms_.size()) throw ParseError("unbalanced '['", open);
      const Sym& s = syms_[pos_];
      if (s.kind == SymKind::kPlus) break;
      if (s.kind == SymKind::kClose) throw ParseError("bracket closed without '+'", s.offset);
      if (s.kind == SymKind::kRBrace) throw ParseError("unbalanced '}'", s.offset);
      item(depth + 1);
    }
    const std::size_t plus_offset = syms_[pos_].offset;
    ++pos_;
    if (utt_.tokens.size() == rm_begin) throw ParseError("empty reparandum", plus_offset);
    DisfluencySpan result;
    result.nesting_depth = depth;
    result.reparandum = {rm_begin, utt_.tokens.size()};
    if (pos_ < syms_.size() && syms_[pos_].kind == SymKind::kLBrace) {
      const TokenRange ir = braces();
      if (!ir.empty()) result.interregnum = ir;
    }
    const std::size_t rp_begin = utt_.tokens.size();
    while (true) {
      if (pos_ >= syms_.size()) throw ParseError("unbalanced '['", open);
      const Sym& s = syms_[pos_];
      if (s.kind == SymKind::kClose) break;
      if (s.kind == SymKind::kPlus) throw ParseError("second '+' in one bracket", s.offset);
      if (s.kind == SymKind::kRBrace) throw ParseError("unbalanced '}'", s.offset);
      item(depth + 1);
    }
    ++pos_;
    if (utt_.tokens.size() > rp_begin) result.repair = TokenRange{rp_begin, utt_.tokens.size()};
    utt_.spans[index] = result;
  }

  std::vector<Sym> syms_;
  std::size_t pos_ = 0;
  const MarkupOptions& opts_;
  Utterance utt_;
};

}  // namespace

void apply_identity_flags(Token& tok, const MarkupOptions& opts) {
  const std::string lw = to_lower(tok.surface);
  tok.is_filled_pause =
      std::find(opts.filled_pauses.begin(), opts.filled_pauses.end(), lw) != opts.filled_pauses.end();
  tok.is_discourse_marker = std::find(opts.discourse_markers.begin(), opts.discourse_markers.end(),
                                      lw) != opts.discourse_markers.end();
  tok.is_fragment = tok.surface.size() > 1 && tok.surface.back() == '-';
}

Utterance parse_markup(std::string_view line, const MarkupOptions& opts) {
  MarkupParser parser(tokenize(line, opts), opts);
  Utterance utt = parser.run();
  utt.labels = derive_labels(utt);
  return utt;
}

// ---- rendering ---------------------------------------------------------

namespace {

void render_token(const Token& t, std::string& out) {
  if (!out.empty()) out += ' ';
  out += t.surface;
  if (!t.pos.empty()) {
    out += '/';
    out += t.pos;
  }
}

void render_symbol(const char* s, std::string& out) {
  if (!out.empty()) out += ' ';
  out += s;
}

void render_region(const Utterance& utt, TokenRange region, std::size_t& next_span,
                   std::string& out);

void render_span(const Utterance& utt, std::size_t& next_span, std::string& out) {
  const DisfluencySpan& s = utt.spans[next_span++];
  render_symbol("[", out);
  render_region(utt, s.reparandum, next_span, out);
  render_symbol("+", out);
  if (s.interregnum) {
    render_symbol("{", out);
    for (std::size_t i = s.interregnum->begin; i < s.interregnum->end; ++i) render_token(utt.tokens[i], out);
    render_symbol("}", out);
  }
  if (s.repair) render_region(utt, *s.repair, next_span, out);
  render_symbol("]", out);
}

void render_region(const Utterance& utt, TokenRange region, std::size_t& next_span,
                   std::string& out) {
  std::size_t i = region.begin;
  while (i < region.end) {
    if (next_span < utt.spans.size() && utt.spans[next_span].reparandum.begin == i) {
      const std::size_t end = utt.spans[next_span].end();
      render_span(utt, next_span, out);
      i = end;
    } else {
      render_token(utt.tokens[i], out);
      ++i;
    }
  }
}

}  // namespace

std::string render_markup(const Utterance& utt) {
  std::string out;
  std::size_t next_span = 0;
  render_region(utt, {0, utt.tokens.size()}, next_span, out);
  return out;
}

std::vector<Label> derive_labels(const Utterance& utt) {
  const std::size_t n = utt.tokens.size();
  std::vector<bool> in_rm(n, false), in_rp(n, false), starts(n, false);
  for (const auto& s : utt.spans) {
    for (std::size_t i = s.reparandum.begin; i < s.reparandum.end; ++i) in_rm[i] = true;
    starts[s.reparandum.begin] = true;
    if (s.repair) {
      for (std::size_t i = s.repair->begin; i < s.repair->end; ++i) in_rp[i] = true;
      starts[s.repair->begin] = true;
    }
  }
  std::vector<Label> labels(n, Label::kO);
  int prev_cat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int cat = in_rm[i] && in_rp[i] ? 3 : in_rm[i] ? 1 : in_rp[i] ? 2 : 0;
    if (cat != 0) {
      const bool begin = cat != prev_cat || starts[i];
      labels[i] = static_cast<Label>(2 * cat - (begin ? 1 : 0));
    }
    prev_cat = cat;
  }
  return labels;
}

// ---- categorization ----------------------------------------------------

std::string_view kind_name(DisfluencyKind k) {
  switch (k) {
    case DisfluencyKind::kRepetition: return "repetition";
    case DisfluencyKind::kRephrase: return "rephrase";
    case DisfluencyKind::kRestart: return "restart";
    case DisfluencyKind::kNested: return "nested";
  }
  return "?";
}

std::string_view bucket_name(LengthBucket b) {
  switch (b) {
    case LengthBucket::k1to2: return "1-2";
    case LengthBucket::k3to5: return "3-5";
    case LengthBucket::k6to8: return "6-8";
    case LengthBucket::k9plus: return "8+";
  }
  return "?";
}

std::string_view word_class_name(WordClass w) {
  switch (w) {
    case WordClass::kContentContent: return "content-content";
    case WordClass::kContentFunction: return "content-function";
    case WordClass::kFunctionFunction: return "function-function";
  }
  return "?";
}

LengthBucket length_bucket(std::size_t n) {
  if (n <= 2) return LengthBucket::k1to2;
  if (n <= 5) return LengthBucket::k3to5;
  if (n <= 8) return LengthBucket::k6to8;
  return LengthBucket::k9plus;
}

bool is_content_word(const Token& tok) {
  static const std::set<std::string> kAux = {"be",   "am",  "is",    "are", "was", "were",
                                             "been", "being", "have", "has", "had", "having",
                                             "do",   "does", "did",  "'s",  "'re", "'ve",
                                             "'m",   "'d",  "'ll"};
  const std::string& p = tok.pos;
  const auto starts = [&](const char* prefix) { return p.rfind(prefix, 0) == 0; };
  if (starts("NN") || starts("JJ")) return true;
  const std::string lw = to_lower(tok.surface);
  if (starts("RB")) return lw != "not" && lw != "n't";
  if (starts("VB")) return kAux.count(lw) == 0;
  return false;
}

DisfluencyCategory categorize(const DisfluencySpan& span, const Utterance& utt) {
  std::vector<bool> skip(utt.tokens.size(), false);
  for (const auto& s : utt.spans) {
    if (s.interregnum) {
      for (std::size_t i = s.interregnum->begin; i < s.interregnum->end; ++i) skip[i] = true;
    }
  }
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    if (utt.tokens[i].is_fragment) skip[i] = true;
  }
  auto words = [&](TokenRange r) {
    std::vector<std::string> w;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (!skip[i]) w.push_back(to_lower(utt.tokens[i].surface));
    }
    return w;
  };
  auto has_content = [&](TokenRange r) {
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (is_content_word(utt.tokens[i])) return true;
    }
    return false;
  };

  DisfluencyCategory cat;
  cat.reparandum_length = length_bucket(span.reparandum.size());
  const bool rm_content = has_content(span.reparandum);
  const bool rp_content = span.repair && has_content(*span.repair);
  cat.word_class = rm_content && rp_content   ? WordClass::kContentContent
                   : rm_content || rp_content ? WordClass::kContentFunction
                                              : WordClass::kFunctionFunction;
  if (!span.repair) {
    cat.kind = DisfluencyKind::kRestart;
    return cat;
  }
  const auto rm = words(span.reparandum);
  const auto rp = words(*span.repair);
  if (!rm.empty() && rp.size() >= rm.size() && std::equal(rm.begin(), rm.end(), rp.begin())) {
    cat.kind = DisfluencyKind::kRepetition;
    return cat;
  }
  const bool has_child = std::any_of(utt.spans.begin(), utt.spans.end(), [&](const DisfluencySpan& s) {
    return s.nesting_depth > span.nesting_depth && s.reparandum.begin >= span.reparandum.begin &&
           s.end() <= span.end();
  });
  cat.kind = has_child ? DisfluencyKind::kNested : DisfluencyKind::kRephrase;
  return cat;
}

// ---- alignment ---------------------------------------------------------

std::vector<AlignedPair> align_tokens(std::span<const std::string> original,
                                      std::span<const std::string> corrected) {
  const std::size_t n = original.size(), m = corrected.size();
  std::vector<std::string> a(n), b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = to_lower(original[i]);
  for (std::size_t j = 0; j < m; ++j) b[j] = to_lower(corrected[j]);
  std::vector<std::size_t> dp((n + 1) * (m + 1));
  auto D = [&](std::size_t i, std::size_t j) -> std::size_t& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) D(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) D(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = D(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
      D(i, j) = std::min({diag, D(i - 1, j) + 1, D(i, j - 1) + 1});
    }
  }
  std::vector<AlignedPair> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1] && D(i - 1, j - 1) == D(i, j)) {
      ops.push_back({EditOp::kMatch, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && j > 0 && a[i - 1] != b[j - 1] && D(i - 1, j - 1) + 1 == D(i, j)) {
      ops.push_back({EditOp::kSubstitute, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && D(i - 1, j) + 1 == D(i, j)) {
      ops.push_back({EditOp::kDelete, i - 1, std::nullopt});
      --i;
    } else {
      ops.push_back({EditOp::kInsert, std::nullopt, j - 1});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

std::vector<AlignedPair> align_tokens(std::span<const Token> original,
                                      std::span<const Token> corrected) {
  std::vector<std::string> a, b;
  for (const auto& t : original) a.push_back(t.surface);
  for (const auto& t : corrected) b.push_back(t.surface);
  return align_tokens(std::span<const std::string>(a), std::span<const std::string>(b));
}

std::size_t edit_cost(std::span<const AlignedPair> alignment) {
  return static_cast<std::size_t>(std::count_if(alignment.begin(), alignment.end(),
                                                [](const AlignedPair& p) { return p.op != EditOp::kMatch; }));
}

Utterance silver_remap(const Utterance& original, std::vector<Token> corrected,
                       const LabelPredictor& predictor, std::string id) {
  if (corrected.empty()) throw Error("silver_remap: empty corrected transcript for '" + original.id + "'");
  const auto alignment = align_tokens(std::span<const Token>(original.tokens), std::span<const Token>(corrected));
  Utterance out;
  out.id = id.empty() ? original.id : std::move(id);
  out.tokens = std::move(corrected);
  const std::vector<Label> orig_labels = original.labels.empty() ? derive_labels(original) : original.labels;
  if (edit_cost(alignment) == 0) {
    out.spans = original.spans;
    out.labels = orig_labels;
    return out;
  }
  const std::vector<Label> predicted = predictor(out);
  if (predicted.size() != out.tokens.size()) throw ShapeError("silver_remap: predictor returned wrong length");
  out.labels.assign(out.tokens.size(), Label::kO);
  for (const auto& p : alignment) {
    if (!p.corrected) continue;
    out.labels[*p.corrected] = p.op == EditOp::kMatch ? orig_labels[*p.original] : predicted[*p.corrected];
  }
  repair_bio(out.labels);
  return out;
}

// ---- lexicon -----------------------------------------------------------

void Lexicon::add(std::string word, std::vector<Phone> phones) {
  entries_.insert_or_assign(to_lower(word), std::move(phones));
}

std::vector<Phone> Lexicon::lookup(std::string_view word) const {
  auto it = entries_.find(to_lower(word));
  if (it == entries_.end()) return {Phone{std::string(kUnknownPhone), Stress::kNone}};
  return it->second;
}

bool Lexicon::contains(std::string_view word) const { return entries_.count(to_lower(word)) != 0; }

Phone parse_phone(std::string_view text) {
  if (text.empty()) throw Error("empty phone");
  Phone p;
  std::string_view base = text;
  const char last = text.back();
  if (std::isdigit(static_cast<unsigned char>(last))) {
    if (last > '2') throw Error("invalid stress digit in phone '" + std::string(text) + "'");
    p.stress = last == '1' ? Stress::kPrimary : last == '2' ? Stress::kSecondary : Stress::kNone;
    base = text.substr(0, text.size() - 1);
  }
  if (base.empty() || !std::all_of(base.begin(), base.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) != 0;
      })) {
    throw Error("invalid phone '" + std::string(text) + "'");
  }
  p.label = std::string(base);
  return p;
}

std::string render_phone(const Phone& p) {
  switch (p.stress) {
    case Stress::kPrimary: return p.label + "1";
    case Stress::kSecondary: return p.label + "2";
    case Stress::kNone: break;
  }
  return p.label;
}

Lexicon parse_lexicon(std::istream& in, const std::string& source) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(";;;", 0) == 0) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    // Alternate pronunciations "word(2)" keep the first entry only.
    const auto paren = word.find('(');
    bool alternate = false;
    if (paren != std::string::npos && paren > 0 && word.back() == ')') {
      word.resize(paren);
      alternate = true;
    }
    std::vector<Phone> phones;
    std::string ph;
    while (ls >> ph) {
      try {
        phones.push_back(parse_phone(ph));
      } catch (const Error& e) {
        throw FormatError(source, lineno, e.what());
      }
    }
    if (phones.empty()) throw FormatError(source, lineno, "entry '" + word + "' has no phones");
    if (alternate && lex.contains(word)) continue;
    lex.add(word, std::move(phones));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  return parse_lexicon(in, path.string());
}

void save_lexicon(const Lexicon& lex, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  std::vector<std::string> words;
  for (const auto& kv : lex.entries()) words.push_back(kv.first);
  std::sort(words.begin(), words.end());
  for (const auto& w : words) {
    out << w << '\t';
    const auto& ph = lex.entries().at(w);
    for (std::size_t i = 0; i < ph.size(); ++i) out << (i ? " " : "") << render_phone(ph[i]);
    out << '\n';
  }
}

void resolve_phones(Utterance& utt, const Lexicon& lex) {
  for (auto& tok : utt.tokens) {
    if (lex.contains(tok.surface)) {
      tok.phones = lex.lookup(tok.surface);
      continue;
    }
    if (tok.is_fragment && lex.contains(tok.surface.substr(0, tok.surface.size() - 1))) {
      tok.phones = lex.lookup(tok.surface.substr(0, tok.surface.size() - 1));
      continue;
    }
    if (tok.surface.find('_') != std::string::npos) {
      tok.phones.clear();
      std::istringstream parts(tok.surface);
      std::string part;
      while (std::getline(parts, part, '_')) {
        if (part.empty()) continue;
        auto ph = lex.lookup(part);
        tok.phones.insert(tok.phones.end(), ph.begin(), ph.end());
      }
      if (!tok.phones.empty()) continue;
    }
    tok.phones = lex.lookup(tok.surface);
  }
}

}  // namespace disfl
