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

#include "disfl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "disfl/dsp.hpp"
#include "disfl/error.hpp"
#include "disfl/prosody_features.hpp"

namespace disfl {

void SynthConfig::validate() const {
  const std::pair<const char*, double> rates[] = {
      {"disfluency_rate", disfluency_rate}, {"repetition", repetition},
      {"rephrase", rephrase},               {"restart", restart},
      {"nested", nested},                   {"interregnum_rate", interregnum_rate},
      {"lead_rate", lead_rate},             {"fluent_repetition_rate", fluent_repetition_rate},
      {"filler_rate", filler_rate}};
  for (const auto& [name, v] : rates) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(std::string("synth.") + name + " must lie in [0,1], got " + std::to_string(v));
    }
  }
  if (disfluency_rate > 0 && repetition + rephrase + restart + nested <= 0) {
    throw ConfigError("synth: disfluency mix is all zero");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("synth.delta must be finite and >= 0");
  if (train == 0) throw ConfigError("synth.train must be positive");
  if (nouns < 2 || verbs < 2 || adjectives < 2 || adverbs < 2) {
    throw ConfigError("synth: each open word class needs at least 2 words");
  }
  if (embedding_dim == 0) throw ConfigError("synth.embedding_dim must be positive");
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

std::size_t pick_weighted(Rng& rng, std::span<const double> w) {
  double total = 0;
  for (double x : w) total += x;
  double u = uniform(rng) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return w.size() - 1;
}

struct Word {
  std::string surface;
  std::string pos;
  std::vector<Phone> phones;
};

const char* const kOpenTags[] = {"NN", "NNS", "VB", "VBD", "JJ", "RB"};

struct Vocabulary {
  std::vector<Word> words;
  std::map<std::string, std::vector<std::size_t>> by_pos;

  std::size_t add(Word w) {
    by_pos[w.pos].push_back(words.size());
    words.push_back(std::move(w));
    return words.size() - 1;
  }
  const Word& random(Rng& rng, const std::string& pos) const {
    const auto& ids = by_pos.at(pos);
    return words[ids[pick(rng, ids.size())]];
  }
  std::size_t count(const std::string& pos) const {
    auto it = by_pos.find(pos);
    return it == by_pos.end() ? 0 : it->second.size();
  }
};

Phone vowel_phone(char v, Stress s) {
  switch (v) {
    case 'a': return {"AA", s};
    case 'e': return {"EH", s};
    case 'i': return {"IY", s};
    case 'o': return {"OW", s};
    default: return {"UW", s};
  }
}

// Pseudo-words spelled as consonant-vowel syllables; each letter maps to one phone.
Word pseudo_word(Rng& rng, const std::string& pos) {
  static const std::string kCons = "bdgklmnprstvzf";
  static const std::string kVow = "aeiou";
  const std::size_t syllables = 1 + pick(rng, 3);
  Word w;
  w.pos = pos;
  for (std::size_t s = 0; s < syllables; ++s) {
    const char c = kCons[pick(rng, kCons.size())];
    const char v = kVow[pick(rng, kVow.size())];
    w.surface += c;
    w.surface += v;
    w.phones.push_back({std::string(1, static_cast<char>(std::toupper(c))), Stress::kNone});
    const Stress st = s == 0 ? Stress::kPrimary : s == 2 ? Stress::kSecondary : Stress::kNone;
    w.phones.push_back(vowel_phone(v, st));
    if (uniform(rng) < 0.3) {
      const char coda = kCons[pick(rng, kCons.size())];
      w.surface += coda;
      w.phones.push_back({std::string(1, static_cast<char>(std::toupper(coda))), Stress::kNone});
    }
  }
  return w;
}

struct Fixed {
  const char* surface;
  const char* pos;
  const char* phones;
};

// Closed-class words with hand-written pronunciations.
const Fixed kFunctionWords[] = {
    {"the", "DT", "DH AH0"},       {"a", "DT", "AH0"},          {"this", "DT", "DH IH1 S"},
    {"that", "DT", "DH AE1 T"},    {"i", "PRP", "AY1"},         {"you", "PRP", "Y UW1"},
    {"he", "PRP", "HH IY1"},       {"she", "PRP", "SH IY1"},    {"it", "PRP", "IH1 T"},
    {"we", "PRP", "W IY1"},        {"they", "PRP", "DH EY1"},   {"in", "IN", "IH0 N"},
    {"on", "IN", "AA1 N"},         {"at", "IN", "AE1 T"},       {"by", "IN", "B AY1"},
    {"with", "IN", "W IH1 DH"},    {"for", "IN", "F AO1 R"},    {"to", "IN", "T UW1"},
    {"and", "CC", "AE1 N D"},      {"but", "CC", "B AH1 T"},    {"or", "CC", "AO1 R"},
    {"can", "MD", "K AE1 N"},      {"will", "MD", "W IH1 L"},   {"would", "MD", "W UH1 D"},
    {"is", "VBZ", "IH1 Z"},        {"was", "VBZ", "W AA1 Z"},   {"my", "PRP$", "M AY1"},
    {"your", "PRP$", "Y AO1 R"},   {"our", "PRP$", "AW1 ER0"},  {"uh", "UH", "AH1"},
    {"um", "UH", "AH1 M"},         {"well", "UH", "W EH1 L"},   {"like", "UH", "L AY1 K"},
    {"so", "UH", "S OW1"},         {"then", "RB", "DH EH1 N"},  {"think", "VBP", "TH IH1 NG K"},
    {"know", "VBP", "N OW1"},      {"mean", "VBP", "M IY1 N"},
};

std::vector<Phone> parse_phones(const char* s) {
  std::vector<Phone> out;
  std::istringstream in(s);
  std::string p;
  while (in >> p) out.push_back(parse_phone(p));
  return out;
}

// POS slot sequences for fluent sentences. "AUX" draws from {is, was}.
const std::vector<std::vector<std::string>> kTemplates = {
    {"PRP", "VBD", "DT", "NN"},
    {"DT", "NN", "VBD", "IN", "DT", "NN"},
    {"PRP", "MD", "VB", "DT", "JJ", "NN"},
    {"DT", "JJ", "NN", "VBD", "RB"},
    {"PRP", "VBD", "DT", "NN", "IN", "DT", "JJ", "NN"},
    {"DT", "NNS", "VBD", "IN", "PRP"},
    {"PRP", "VBZ", "RB", "JJ"},
    {"IN", "DT", "NN", "PRP", "VBD", "DT", "NNS"},
    {"PRP", "VBD", "CC", "VBD", "DT", "NNS"},
    {"DT", "NN", "MD", "VB", "RB"},
    {"PRP$", "NN", "VBZ", "JJ"},
    {"PRP", "VBD", "PRP$", "JJ", "NNS"},
};

const std::vector<std::vector<std::pair<const char*, const char*>>> kLeadChunks = {
    {{"and", "CC"}},
    {{"but", "CC"}, {"i", "PRP"}},
    {{"so", "UH"}},
    {{"and", "CC"}, {"then", "RB"}},
    {{"by", "IN"}, {"the", "DT"}},
    {{"in", "IN"}, {"my", "PRP$"}},
    {{"i", "PRP"}, {"think", "VBP"}},
    {{"well", "UH"}},
    {{"it", "PRP"}, {"was", "VBZ"}},
    {{"we", "PRP"}},
};
const std::vector<std::vector<std::string>> kLeadPatterns = {{"DT", "JJ"}, {"PRP", "VBD"}, {"IN", "DT"}};

const std::vector<std::pair<const char*, const char*>> kInterregna = {
    {"uh", "UH"}, {"um", "UH"}, {"I_mean", "UH"}, {"you_know", "UH"}, {"well", "UH"}};

bool open_class(const std::string& pos) {
  return std::find(std::begin(kOpenTags), std::end(kOpenTags), pos) != std::end(kOpenTags);
}

class Generator {
 public:
  Generator(std::uint64_t seed, const SynthConfig& cfg) : cfg_(cfg), rng_(seed) {
    build_vocabulary();
    build_cue_tables();
  }

  SynthCorpus run() {
    SynthCorpus c;
    c.train = split("train", cfg_.train);
    c.dev = split("dev", cfg_.dev);
    c.test = split("test", cfg_.test);
    c.lexicon = lexicon_;
    c.embeddings = build_embeddings();
    c.cues = std::move(cues_);
    c.cue_means = std::move(means_);
    c.cue_noise = noise_;
    return c;
  }

 private:
  using Seq = std::vector<Word>;

  void build_vocabulary() {
    std::set<std::string> used;
    for (const auto& f : kFunctionWords) {
      vocab_.add({f.surface, f.pos, parse_phones(f.phones)});
      used.insert(f.surface);
    }
    auto fresh = [&](const std::string& pos) {
      while (true) {
        Word w = pseudo_word(rng_, pos);
        if (used.insert(w.surface).second && used.count(w.surface + "s") == 0 &&
            used.count(w.surface + "d") == 0) {
          return w;
        }
      }
    };
    for (std::size_t i = 0; i < cfg_.nouns; ++i) {
      Word w = fresh("NN");
      Word plural{w.surface + "s", "NNS", w.phones};
      plural.phones.push_back({"Z", Stress::kNone});
      used.insert(plural.surface);
      vocab_.add(std::move(w));
      vocab_.add(std::move(plural));
    }
    for (std::size_t i = 0; i < cfg_.verbs; ++i) {
      Word w = fresh("VB");
      Word past{w.surface + "d", "VBD", w.phones};
      past.phones.push_back({"D", Stress::kNone});
      used.insert(past.surface);
      vocab_.add(std::move(w));
      vocab_.add(std::move(past));
    }
    for (std::size_t i = 0; i < cfg_.adjectives; ++i) vocab_.add(fresh("JJ"));
    for (std::size_t i = 0; i < cfg_.adverbs; ++i) vocab_.add(fresh("RB"));
    for (const auto& w : vocab_.words) lexicon_.add(w.surface, w.phones);
  }

  // Per-POS MFCC means and per-phone offsets.
  void build_cue_tables() {
    noise_ = std::vector<double>(kNumCues, 0.5);
    noise_[0] = 0.04;   // pause (scaled)
    noise_[1] = 0.03;   // duration
    noise_[2] = 0.06;   // nccf
    noise_[3] = 0.10;   // pov log pitch
    noise_[4] = 0.03;   // delta log pitch
    noise_[5] = 0.30;   // energy total
    noise_[6] = 0.30;   // energy low
    noise_[7] = 0.35;   // energy high
    noise_[8] = 0.8;    // c0
    for (const auto& [pos, ids] : vocab_.by_pos) {
      auto& m = pos_mfcc_[pos];
      m.resize(kNumMfcc);
      m[0] = -5.0 + 0.6 * normal(rng_);
      for (std::size_t k = 1; k < kNumMfcc; ++k) m[k] = 0.4 * normal(rng_);
    }
    std::set<std::string> phones;
    for (const auto& w : vocab_.words) {
      for (const auto& p : w.phones) phones.insert(p.label);
    }
    for (const auto& p : phones) {
      auto& m = phone_mfcc_[p];
      m.resize(kNumMfcc);
      for (std::size_t k = 0; k < kNumMfcc; ++k) m[k] = 0.3 * normal(rng_);
    }
  }

  Embeddings build_embeddings() {
    Embeddings emb(cfg_.embedding_dim);
    std::map<std::string, std::vector<double>> centroid;
    for (const auto& [pos, ids] : vocab_.by_pos) {
      auto& c = centroid[pos];
      for (std::size_t d = 0; d < cfg_.embedding_dim; ++d) c.push_back(normal(rng_));
    }
    for (const auto& w : vocab_.words) {
      std::vector<double> v = centroid[w.pos];
      for (double& x : v) x = quantize6(x + cfg_.embedding_noise * normal(rng_));
      emb.add(w.surface, std::move(v));
    }
    return emb;
  }

  Word take(const std::string& pos) {
    return vocab_.random(rng_, pos);
  }

  Word fixed(const char* surface, const char* pos) {
    Word w{surface, pos, {}};
    w.phones = lexicon_.lookup(surface);
    return w;
  }

  Seq template_sentence() {
    Seq s;
    for (const auto& slot : kTemplates[pick(rng_, kTemplates.size())]) s.push_back(take(slot));
    return s;
  }

  Seq lead_chunk() {
    Seq s;
    if (uniform(rng_) < 0.6) {
      for (const auto& [w, p] : kLeadChunks[pick(rng_, kLeadChunks.size())]) s.push_back(fixed(w, p));
    } else {
      for (const auto& slot : kLeadPatterns[pick(rng_, kLeadPatterns.size())]) s.push_back(take(slot));
    }
    return s;
  }

  // A different word with the same POS where the class allows it.
  Word substitute(const Word& w) {
    if (vocab_.count(w.pos) < 2) return w;
    while (true) {
      Word r = take(w.pos);
      if (r.surface != w.surface) return r;
    }
  }

  struct Draft {
    std::vector<Word> words;
    std::vector<DisfluencySpan> spans;
  };

  std::optional<TokenRange> maybe_interregnum(Draft& d) {
    if (uniform(rng_) >= cfg_.interregnum_rate) return std::nullopt;
    const auto& [w, p] = kInterregna[pick(rng_, kInterregna.size())];
    const std::size_t at = d.words.size();
    Word word{w, p, {}};
    d.words.push_back(std::move(word));
    return TokenRange{at, at + 1};
  }

  void append(Draft& d, const Seq& s, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) d.words.push_back(s[i]);
  }

  Draft repetition(const Seq& base) {
    static const double kLen[] = {0.55, 0.30, 0.15};
    const std::size_t k = std::min(base.size(), 1 + pick_weighted(rng_, kLen));
    const std::size_t p = pick(rng_, base.size() - k + 1);
    Draft d;
    append(d, base, 0, p);
    DisfluencySpan s;
    s.reparandum = {d.words.size(), d.words.size() + k};
    append(d, base, p, p + k);
    s.interregnum = maybe_interregnum(d);
    s.repair = TokenRange{d.words.size(), d.words.size() + k};
    append(d, base, p, base.size());
    d.spans.push_back(s);
    return d;
  }

  std::optional<Draft> rephrase(const Seq& base) {
    static const double kLen[] = {0.4, 0.4, 0.2};
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::size_t k = std::min(base.size(), 1 + pick_weighted(rng_, kLen));
      const std::size_t p = pick(rng_, base.size() - k + 1);
      Seq alt(base.begin() + static_cast<std::ptrdiff_t>(p), base.begin() + static_cast<std::ptrdiff_t>(p + k));
      bool changed = false;
      for (auto& w : alt) {
        if (open_class(w.pos)) {
          w = substitute(w);
          changed = true;
        }
      }
      if (!changed) continue;
      Draft d;
      append(d, base, 0, p);
      DisfluencySpan s;
      s.reparandum = {d.words.size(), d.words.size() + k};
      append(d, alt, 0, k);
      s.interregnum = maybe_interregnum(d);
      s.repair = TokenRange{d.words.size(), d.words.size() + k};
      append(d, base, p, base.size());
      d.spans.push_back(s);
      return d;
    }
    return std::nullopt;
  }

  Draft restart(const Seq& sentence) {
    Draft d;
    const Seq lead = lead_chunk();
    DisfluencySpan s;
    s.reparandum = {0, lead.size()};
    append(d, lead, 0, lead.size());
    s.interregnum = maybe_interregnum(d);
    append(d, sentence, 0, sentence.size());
    d.spans.push_back(s);
    return d;
  }

  std::optional<Draft> nested(const Seq& base) {
    if (base.size() < 2) return std::nullopt;
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::size_t k = std::min(base.size(), std::size_t{2} + pick(rng_, 2));
      const std::size_t p = pick(rng_, base.size() - k + 1);
      if (!open_class(base[p].pos)) continue;
      Seq alt(base.begin() + static_cast<std::ptrdiff_t>(p), base.begin() + static_cast<std::ptrdiff_t>(p + k));
      for (auto& w : alt) {
        if (open_class(w.pos)) w = substitute(w);
      }
      Draft d;
      append(d, base, 0, p);
      DisfluencySpan outer, inner;
      inner.nesting_depth = 1;
      const std::size_t start = d.words.size();
      inner.reparandum = {start, start + 1};
      inner.repair = TokenRange{start + 1, start + 2};
      d.words.push_back(alt[0]);
      d.words.push_back(alt[0]);
      append(d, alt, 1, k);
      outer.reparandum = {start, d.words.size()};
      outer.interregnum = maybe_interregnum(d);
      outer.repair = TokenRange{d.words.size(), d.words.size() + k};
      append(d, base, p, base.size());
      d.spans.push_back(outer);
      d.spans.push_back(inner);
      return d;
    }
    return std::nullopt;
  }

  Draft fluent(Seq base) {
    Draft d;
    if (base.size() >= 2 && uniform(rng_) < cfg_.fluent_repetition_rate) {
      const std::size_t j = pick(rng_, base.size());
      base.insert(base.begin() + static_cast<std::ptrdiff_t>(j), base[j]);
    }
    if (uniform(rng_) < cfg_.filler_rate) {
      const std::size_t j = 1 + pick(rng_, base.size());
      base.insert(base.begin() + static_cast<std::ptrdiff_t>(std::min(j, base.size())),
                  fixed(uniform(rng_) < 0.5 ? "uh" : "um", "UH"));
    }
    d.words = std::move(base);
    return d;
  }

  Draft draft_utterance() {
    Seq sentence = template_sentence();
    Seq base;
    if (uniform(rng_) < cfg_.lead_rate) base = lead_chunk();
    base.insert(base.end(), sentence.begin(), sentence.end());
    if (uniform(rng_) >= cfg_.disfluency_rate) return fluent(std::move(base));
    const double mix[] = {cfg_.repetition, cfg_.rephrase, cfg_.restart, cfg_.nested};
    switch (pick_weighted(rng_, mix)) {
      case 1:
        if (auto d = rephrase(base)) return *d;
        break;
      case 2:
        return restart(sentence);
      case 3:
        if (auto d = nested(base)) return *d;
        break;
      default:
        break;
    }
    return repetition(base);
  }

  // Noise-free cue means for token i of an utterance.
  std::vector<double> cue_mean(const std::vector<Token>& toks, std::size_t i) const {
    const Token& t = toks[i];
    const std::size_t n = toks.size();
    const double frac = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    const bool final = i + 1 == n;
    const bool first = i == 0;
    const bool filler = t.is_filled_pause || t.is_discourse_marker;
    const double content = is_content_word(t) ? 1.0 : 0.0;
    const double nph = static_cast<double>(t.phones.size());
    double vowels = 0, stressed = 0;
    for (const auto& p : t.phones) {
      if (p.label.size() == 2 && std::string("AEIOU").find(p.label[0]) != std::string::npos) vowels += 1;
      if (p.stress == Stress::kPrimary) stressed = 1;
    }
    const double vfrac = nph > 0 ? vowels / nph : 0.0;
    std::vector<double> mu(kNumCues);
    mu[0] = 0.04 + 0.10 * content + 0.22 * (first ? 1 : 0) + 0.16 * (filler ? 1 : 0);
    mu[1] = 0.06 + 0.05 * nph + 0.07 * (final ? 1 : 0) + 0.04 * content + 0.12 * (filler ? 1 : 0);
    mu[2] = 0.55 + 0.15 * vfrac + 0.05 * content;
    mu[3] = 1.9 - 0.4 * frac + 0.15 * stressed - 0.2 * (filler ? 1 : 0);
    mu[4] = 0.02 - 0.06 * (final ? 1 : 0) + 0.02 * stressed;
    mu[5] = 11.0 + 1.2 * stressed + 0.8 * content + 1.5 * vfrac - 1.2 * frac - 1.0 * (filler ? 1 : 0);
    mu[6] = 9.6 + 1.1 * stressed + 0.6 * content + 1.2 * vfrac - 1.0 * frac;
    mu[7] = 6.6 + 0.9 * stressed + 1.0 * content + 1.5 * vfrac - 1.1 * frac;
    const auto& pm = pos_mfcc_.count(t.pos) ? pos_mfcc_.at(t.pos) : pos_mfcc_.at("UH");
    const auto& ph = t.phones.empty() || !phone_mfcc_.count(t.phones[0].label)
                         ? std::vector<double>(kNumMfcc, 0.0)
                         : phone_mfcc_.at(t.phones[0].label);
    for (std::size_t k = 0; k < kNumMfcc; ++k) mu[kFirstMfccCue + k] = pm[k] + ph[k];
    return mu;
  }

  std::vector<Utterance> split(const std::string& name, std::size_t count) {
    std::vector<Utterance> out;
    const std::size_t width = std::max<std::size_t>(4, std::to_string(count).size());
    for (std::size_t u = 0; u < count; ++u) {
      Draft d = draft_utterance();
      Utterance utt;
      std::string num = std::to_string(u);
      utt.id = name + "-" + std::string(width - num.size(), '0') + num;
      for (auto& w : d.words) {
        Token t;
        t.surface = w.surface;
        t.pos = w.pos;
        apply_identity_flags(t, MarkupOptions{});
        utt.tokens.push_back(std::move(t));
      }
      utt.spans = std::move(d.spans);
      utt.labels = derive_labels(utt);
      resolve_phones(utt, lexicon_);
      sample_cues(utt);
      out.push_back(std::move(utt));
    }
    return out;
  }

  void sample_cues(Utterance& utt) {
    const std::size_t n = utt.tokens.size();
    std::vector<bool> pre_ip(n, false);
    for (const auto& s : utt.spans) pre_ip[s.pre_ip_token()] = true;
    nn::Matrix obs(n, kNumCues), mean(n, kNumCues);
    for (std::size_t i = 0; i < n; ++i) {
      const auto mu = cue_mean(utt.tokens, i);
      for (std::size_t k = 0; k < kNumCues; ++k) {
        mean(i, k) = mu[k];
        double v = mu[k] + noise_[k] * normal(rng_);
        if (pre_ip[i]) {
          if (k == kPauseCue || k == kDurationCue) v += cfg_.delta * noise_[k];
          if (k >= kFirstEnergyCue && k < kFirstEnergyCue + 3) v -= cfg_.delta * noise_[k];
        }
        if (k == kPauseCue) v = std::clamp(v, 0.0, 0.999);
        if (k == kDurationCue) v = std::max(v, 0.02);
        if (k == kFirstF0Cue) v = std::clamp(v, -1.0, 1.0);
        obs(i, k) = quantize6(v);
      }
    }
    // Alignment derived from the pause and duration cues.
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Token& tok = utt.tokens[i];
      tok.start = quantize6(t + std::expm1(obs(i, kPauseCue)));
      tok.end = quantize6(tok.start + obs(i, kDurationCue));
      t = tok.end;
    }
    cues_.emplace(utt.id, std::move(obs));
    means_.emplace(utt.id, std::move(mean));
  }

  SynthConfig cfg_;
  Rng rng_;
  Vocabulary vocab_;
  Lexicon lexicon_;
  std::vector<double> noise_;
  std::map<std::string, std::vector<double>> pos_mfcc_;
  std::map<std::string, std::vector<double>> phone_mfcc_;
  TokenTable cues_;
  TokenTable means_;
};

}  // namespace

SynthCorpus synth_generate(std::uint64_t seed, const SynthConfig& config) {
  config.validate();
  return Generator(seed, config).run();
}

void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir, bool write_frames) {
  std::filesystem::create_directories(dir);
  write_transcripts(dir / "train.txt", corpus.train);
  write_transcripts(dir / "dev.txt", corpus.dev);
  write_transcripts(dir / "test.txt", corpus.test);
  std::vector<Utterance> all;
  for (const auto* split : {&corpus.train, &corpus.dev, &corpus.test}) {
    all.insert(all.end(), split->begin(), split->end());
  }
  write_alignments(dir / "alignments.tsv", all);
  write_token_table(dir / "cues.tsv", corpus.cues, "cue");
  save_lexicon(corpus.lexicon, dir / "lexicon.txt");
  save_embeddings(corpus.embeddings, dir / "embeddings.txt");
  if (!write_frames) return;
  std::filesystem::create_directories(dir / "frames");
  for (const auto& u : all) {
    const nn::Matrix& cues = corpus.cues.at(u.id);
    dsp::FrameFeatures f;
    const double total = u.tokens.back().end + 0.05;
    const auto frames = static_cast<std::size_t>(std::floor((total - f.frame_len) / f.hop + 1e-9)) + 1;
    f.values = nn::Matrix(frames, dsp::kFrameColumns);
    std::size_t tok = 0;
    for (std::size_t t = 0; t < frames; ++t) {
      const double c = f.center(t);
      while (tok + 1 < u.tokens.size() && c >= u.tokens[tok].end) ++tok;
      for (std::size_t k = 0; k < dsp::kFrameColumns; ++k) f.values(t, k) = cues(tok, kFirstF0Cue + k);
    }
    dsp::write_frame_features(dir / "frames" / (u.id + ".tsv"), f);
  }
}

}  // namespace disfl
