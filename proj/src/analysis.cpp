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

#include "disfl/analysis.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "disfl/error.hpp"

namespace disfl {

double RecallCell::recall() const {
  return tokens == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(tokens);
}

double BreakdownReport::word_class_share(WordClass w, LengthBucket b) const {
  std::size_t all = 0, mine = 0;
  for (const auto& [key, cell] : by_word_class) {
    if (key.second != b) continue;
    all += cell.tokens;
    if (key.first == w) mine += cell.tokens;
  }
  return all == 0 ? 0.0 : static_cast<double>(mine) / static_cast<double>(all);
}

std::vector<std::optional<DisfluencyCategory>> token_categories(const Utterance& utt) {
  std::vector<DisfluencyCategory> cats;
  cats.reserve(utt.spans.size());
  for (const auto& s : utt.spans) cats.push_back(categorize(s, utt));
  std::vector<std::optional<DisfluencyCategory>> out(utt.tokens.size());
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    // Spans are in pre-order, so the first cover is outermost and the last innermost.
    std::optional<std::size_t> outer, inner;
    for (std::size_t s = 0; s < utt.spans.size(); ++s) {
      if (!utt.spans[s].reparandum.contains(i)) continue;
      if (!outer) outer = s;
      inner = s;
    }
    if (!outer) continue;
    if (cats[*inner].kind == DisfluencyKind::kRepetition) {
      out[i] = cats[*inner];
    } else {
      out[i] = cats[*outer];
    }
  }
  return out;
}

std::vector<bool> fluent_repetition_mask(const Utterance& utt) {
  const std::size_t n = utt.tokens.size();
  std::vector<bool> in_span(n, false);
  for (const auto& s : utt.spans) {
    for (std::size_t i = s.reparandum.begin; i < s.end(); ++i) in_span[i] = true;
  }
  std::vector<std::size_t> kept;
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) {
    const Token& t = utt.tokens[i];
    if (t.is_filled_pause || t.is_discourse_marker) continue;
    kept.push_back(i);
    words.push_back(to_lower(t.surface));
  }
  std::vector<bool> mask(n, false);
  for (std::size_t len = 1; len <= 2; ++len) {
    for (std::size_t k = 0; k + 2 * len <= kept.size(); ++k) {
      bool same = true;
      for (std::size_t j = 0; j < len && same; ++j) same = words[k + j] == words[k + len + j];
      if (!same) continue;
      bool clear = true;
      for (std::size_t j = 0; j < 2 * len && clear; ++j) clear = !in_span[kept[k + j]];
      if (!clear) continue;
      for (std::size_t j = 0; j < 2 * len; ++j) mask[kept[k + j]] = true;
    }
  }
  return mask;
}

BreakdownReport breakdown(const std::vector<Utterance>& gold, const std::vector<std::vector<Label>>& predicted) {
  if (gold.size() != predicted.size()) throw ShapeError("breakdown: utterance count mismatch");
  BreakdownReport r;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    const Utterance& utt = gold[u];
    if (predicted[u].size() != utt.tokens.size()) throw ShapeError("breakdown: length mismatch for " + utt.id);
    const auto cats = token_categories(utt);
    const auto fluent_rep = fluent_repetition_mask(utt);
    for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
      const bool flagged = is_reparandum(predicted[u][i]);
      if (fluent_rep[i]) {
        ++r.fluent_repetition.tokens;
        r.fluent_repetition.correct += flagged;
      }
      if (!cats[i]) continue;
      const auto& c = *cats[i];
      auto add = [&](RecallCell& cell) {
        ++cell.tokens;
        cell.correct += flagged;
      };
      add(r.total);
      add(r.by_kind[c.kind]);
      add(r.by_kind_length[{c.kind, c.reparandum_length}]);
      if (c.kind == DisfluencyKind::kRephrase) add(r.by_word_class[{c.word_class, c.reparandum_length}]);
    }
  }
  return r;
}

std::vector<std::vector<Label>> align_predictions(const std::vector<Utterance>& corpus,
                                                  const std::vector<LabeledSequence>& predictions) {
  std::map<std::string, const LabeledSequence*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.utt_id, &p).second) throw Error("predictions list " + p.utt_id + " twice");
  }
  if (by_id.size() != corpus.size()) {
    throw Error("predictions cover " + std::to_string(by_id.size()) + " utterances, corpus has " +
                std::to_string(corpus.size()));
  }
  std::vector<std::vector<Label>> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) throw Error("no predictions for " + u.id);
    if (it->second->predicted.size() != u.tokens.size()) {
      throw ShapeError("predictions for " + u.id + " have " + std::to_string(it->second->predicted.size()) +
                       " tokens, corpus has " + std::to_string(u.tokens.size()));
    }
    out.push_back(it->second->predicted);
  }
  return out;
}

namespace {

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

constexpr std::array kKinds = {DisfluencyKind::kRepetition, DisfluencyKind::kRephrase, DisfluencyKind::kRestart,
                               DisfluencyKind::kNested};
constexpr std::array kBuckets = {LengthBucket::k1to2, LengthBucket::k3to5, LengthBucket::k6to8,
                                 LengthBucket::k9plus};
constexpr std::array kClasses = {WordClass::kContentContent, WordClass::kContentFunction,
                                 WordClass::kFunctionFunction};

template <typename Map, typename Key>
RecallCell cell_at(const Map& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? RecallCell{} : it->second;
}

}  // namespace

void write_breakdown_tsv(const std::filesystem::path& path, const BreakdownReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "section\tgroup\tlength\ttokens\tcorrect\trate\n";
  for (auto k : kKinds) {
    for (auto b : kBuckets) {
      const auto c = cell_at(r.by_kind_length, std::pair{k, b});
      if (c.tokens == 0) continue;
      out << "kind\t" << kind_name(k) << '\t' << bucket_name(b) << '\t' << c.tokens << '\t' << c.correct << '\t'
          << fmt(c.recall(), 6) << '\n';
    }
    const auto c = cell_at(r.by_kind, k);
    out << "kind\t" << kind_name(k) << "\tall\t" << c.tokens << '\t' << c.correct << '\t' << fmt(c.recall(), 6)
        << '\n';
  }
  for (auto w : kClasses) {
    for (auto b : kBuckets) {
      const auto c = cell_at(r.by_word_class, std::pair{w, b});
      if (c.tokens == 0) continue;
      out << "rephrase_word_class\t" << word_class_name(w) << '\t' << bucket_name(b) << '\t' << c.tokens << '\t'
          << c.correct << '\t' << fmt(c.recall(), 6) << '\n';
    }
  }
  out << "total\tall\tall\t" << r.total.tokens << '\t' << r.total.correct << '\t' << fmt(r.total.recall(), 6)
      << '\n';
  out << "fluent_repetition_fp\tall\tall\t" << r.fluent_repetition.tokens << '\t' << r.fluent_repetition.correct
      << '\t' << fmt(r.fluent_repetition_fp_rate(), 6) << '\n';
  if (!out) throw IoError("error writing " + path.string());
}

std::string render_breakdown(const BreakdownReport& r) {
  std::ostringstream s;
  s << "Reparandum recall by type and reparandum length\n";
  s << std::left << std::setw(12) << "type";
  for (auto b : kBuckets) s << std::setw(16) << bucket_name(b);
  s << "overall\n";
  for (auto k : kKinds) {
    s << std::setw(12) << kind_name(k);
    for (auto b : kBuckets) {
      const auto c = cell_at(r.by_kind_length, std::pair{k, b});
      s << std::setw(16) << (c.tokens ? fmt(c.recall(), 2) + " (" + std::to_string(c.tokens) + ")" : "-");
    }
    const auto c = cell_at(r.by_kind, k);
    s << (c.tokens ? fmt(c.recall(), 2) : "-") << '\n';
  }
  s << "\nRephrase recall by word class (share of tokens)\n";
  for (auto w : kClasses) {
    s << std::setw(18) << word_class_name(w);
    for (auto b : {LengthBucket::k1to2, LengthBucket::k3to5}) {
      const auto c = cell_at(r.by_word_class, std::pair{w, b});
      s << std::setw(18)
        << (c.tokens ? fmt(c.recall(), 2) + " (" + fmt(100 * r.word_class_share(w, b), 0) + "%)" : "-");
    }
    s << '\n';
  }
  s << "\nOverall reparandum recall: " << fmt(r.total.recall()) << " over " << r.total.tokens << " tokens\n";
  s << "Fluent-repetition false positives: " << r.fluent_repetition.correct << " / " << r.fluent_repetition.tokens
    << " = " << fmt(r.fluent_repetition_fp_rate()) << '\n';
  return s.str();
}

// ---- histograms ----------------------------------------------------------

std::size_t histogram_bin(double z) {
  if (z < kHistogramLow) return 0;
  if (z >= kHistogramHigh) return kHistogramBins - 1;
  const auto b = static_cast<std::size_t>(std::floor((z - kHistogramLow) / kHistogramWidth));
  return 1 + std::min<std::size_t>(b, kHistogramBins - 3);
}

InnovationHistogram innovation_histogram(const TokenTable& innovations, const std::vector<Utterance>& gold,
                                         std::size_t cue) {
  if (cue >= kNumCues) throw Error("innovation_histogram: cue index " + std::to_string(cue) + " out of range");
  InnovationHistogram h;
  h.cue = cue;
  std::array<std::size_t, kHistogramBins> pre{}, flu{};
  double pre_sum = 0, flu_sum = 0;
  for (const auto& u : gold) {
    auto it = innovations.find(u.id);
    if (it == innovations.end()) throw Error("innovation_histogram: no innovations for " + u.id);
    const auto& z = it->second;
    if (z.rows() != u.tokens.size() || z.cols() <= cue) {
      throw ShapeError("innovation_histogram: bad innovation rows for " + u.id);
    }
    if (u.fluent()) {
      for (std::size_t i = 0; i < z.rows(); ++i) {
        ++flu[histogram_bin(z(i, cue))];
        flu_sum += z(i, cue);
        ++h.fluent.count;
      }
      continue;
    }
    std::vector<bool> pre_ip(u.tokens.size(), false);
    for (const auto& s : u.spans) pre_ip[s.pre_ip_token()] = true;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      if (!pre_ip[i]) continue;
      ++pre[histogram_bin(z(i, cue))];
      pre_sum += z(i, cue);
      ++h.pre_ip.count;
    }
  }
  auto finish = [](HistogramGroup& g, const std::array<std::size_t, kHistogramBins>& counts, double sum) {
    if (g.count == 0) {
      g.mean = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    g.mean = sum / static_cast<double>(g.count);
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
      g.mass[b] = static_cast<double>(counts[b]) / static_cast<double>(g.count);
    }
  };
  finish(h.pre_ip, pre, pre_sum);
  finish(h.fluent, flu, flu_sum);
  return h;
}

void write_histogram_tsv(const std::filesystem::path& path, const InnovationHistogram& h) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# cue " << h.cue << " (" << cue_name(h.cue) << ") pre_ip n=" << h.pre_ip.count
      << " mean=" << fmt(h.pre_ip.mean, 6) << " fluent n=" << h.fluent.count << " mean=" << fmt(h.fluent.mean, 6)
      << '\n';
  out << "bin_low\tbin_high\tpre_ip\tfluent\n";
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    const double lo = b == 0 ? -std::numeric_limits<double>::infinity()
                             : kHistogramLow + kHistogramWidth * static_cast<double>(b - 1);
    const double hi = b + 1 == kHistogramBins ? std::numeric_limits<double>::infinity()
                                              : kHistogramLow + kHistogramWidth * static_cast<double>(b);
    out << lo << '\t' << hi << '\t' << fmt(h.pre_ip.mass[b], 9) << '\t' << fmt(h.fluent.mass[b], 9) << '\n';
  }
  if (!out) throw IoError("error writing " + path.string());
}

// ---- model comparison ----------------------------------------------------

std::size_t sentence_errors(std::span<const Label> predicted, std::span<const Label> gold) {
  if (predicted.size() != gold.size()) throw ShapeError("sentence_errors: length mismatch");
  std::size_t e = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) e += is_reparandum(predicted[i]) != is_reparandum(gold[i]);
  return e;
}

namespace {

std::string bracketed(const Utterance& u, std::span<const Label> labels) {
  std::string s;
  bool open = false;
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    const bool rm = is_reparandum(labels[i]);
    if (!s.empty()) s += ' ';
    if (rm && !open) {
      s += '[';
      open = true;
    }
    s += u.tokens[i].surface;
    if (open && (i + 1 == u.tokens.size() || !is_reparandum(labels[i + 1]))) {
      s += ']';
      open = false;
    }
  }
  return s;
}

}  // namespace

ModelDiff model_diff(const std::vector<LabeledSequence>& a, const std::vector<LabeledSequence>& b,
                     const std::vector<Utterance>& gold) {
  const auto pa = align_predictions(gold, a);
  const auto pb = align_predictions(gold, b);
  ModelDiff d;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    const auto& utt = gold[u];
    const std::size_t ea = sentence_errors(pa[u], utt.labels);
    const std::size_t eb = sentence_errors(pb[u], utt.labels);
    if (ea == eb) continue;
    SentenceDiff s{utt.id, ea, eb, {}};
    s.rendering = "  gold: " + bracketed(utt, utt.labels) + "\n  A:    " + bracketed(utt, pa[u]) +
                  "\n  B:    " + bracketed(utt, pb[u]) + "\n";
    (ea < eb ? d.a_better : d.b_better).push_back(std::move(s));
  }
  return d;
}

std::string render_model_diff(const ModelDiff& d) {
  std::ostringstream s;
  s << "A has fewer errors in " << d.a_better.size() << " sentences; B in " << d.b_better.size() << ".\n";
  auto list = [&](const char* title, const std::vector<SentenceDiff>& v) {
    s << '\n' << title << '\n';
    for (const auto& x : v) {
      s << x.utt_id << "  errors A=" << x.errors_a << " B=" << x.errors_b << '\n' << x.rendering;
    }
  };
  list("A better:", d.a_better);
  list("B better:", d.b_better);
  return s.str();
}

}  // namespace disfl
