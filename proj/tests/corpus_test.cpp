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

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/error.hpp"
#include "doctest.h"

using namespace disfl;

namespace {

// Independent oracle: cheapest alignment by exhaustive recursion.
std::size_t brute_edit(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                       std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t diag = brute_edit(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  return std::min({diag, brute_edit(a, i + 1, b, j) + 1, brute_edit(a, i, b, j + 1) + 1});
}

bool same_structure(const Utterance& a, const Utterance& b) {
  if (a.tokens.size() != b.tokens.size()) return false;
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    const auto &x = a.tokens[i], &y = b.tokens[i];
    if (x.surface != y.surface || x.pos != y.pos || x.is_filled_pause != y.is_filled_pause ||
        x.is_discourse_marker != y.is_discourse_marker || x.is_fragment != y.is_fragment) {
      return false;
    }
  }
  return a.spans == b.spans && a.labels == b.labels;
}

}  // namespace

TEST_CASE("repetition with interregnum") {
  const Utterance u = parse_markup("[ it's + {uh} it's ] almost");
  REQUIRE(u.spans.size() == 1);
  const auto& s = u.spans[0];
  CHECK(s.reparandum == TokenRange{0, 1});
  CHECK(s.interregnum == TokenRange{1, 2});
  CHECK(s.repair == TokenRange{2, 3});
  CHECK(s.nesting_depth == 0);
  CHECK(u.tokens[1].is_filled_pause);
  CHECK(categorize(s, u).kind == DisfluencyKind::kRepetition);
  CHECK(u.labels == std::vector<Label>{Label::kBRm, Label::kO, Label::kBRp, Label::kO});
}

TEST_CASE("fluent sentence") {
  const Utterance u = parse_markup("hello world");
  CHECK(u.spans.empty());
  CHECK(u.labels == std::vector<Label>{Label::kO, Label::kO});
  CHECK(u.fluent());
}

TEST_CASE("nested disfluency") {
  const Utterance u = parse_markup("[ [ to + to try to ] + for two people ... ]");
  REQUIRE(u.spans.size() == 2);
  CHECK(u.spans[0].nesting_depth == 0);
  CHECK(u.spans[1].nesting_depth == 1);
  CHECK(u.spans[0].reparandum == TokenRange{0, 4});
  CHECK(u.spans[0].repair == TokenRange{4, 7});
  CHECK(u.spans[1].reparandum == TokenRange{0, 1});
  CHECK(u.spans[1].repair == TokenRange{1, 4});
  CHECK(u.labels == std::vector<Label>{Label::kBRm, Label::kBBoth, Label::kIBoth, Label::kIBoth,
                                       Label::kBRp, Label::kIRp, Label::kIRp});
  CHECK(categorize(u.spans[0], u).kind == DisfluencyKind::kNested);
  CHECK(categorize(u.spans[1], u).kind == DisfluencyKind::kRepetition);
}

TEST_CASE("restart and rephrase") {
  const Utterance r = parse_markup("[ By + ] the way");
  REQUIRE(r.spans.size() == 1);
  CHECK_FALSE(r.spans[0].repair.has_value());
  CHECK(categorize(r.spans[0], r).kind == DisfluencyKind::kRestart);

  const Utterance p = parse_markup("[ was it, + {I mean} did you ] go");
  REQUIRE(p.spans.size() == 1);
  CHECK(p.tokens[2].surface == "I_mean");
  CHECK(p.tokens[2].is_discourse_marker);
  CHECK(categorize(p.spans[0], p).kind == DisfluencyKind::kRephrase);
}

TEST_CASE("length buckets and word classes") {
  const Utterance u = parse_markup("[ the/DT big/JJ red/JJ dog/NN + the/DT cat/NN ]");
  const auto c = categorize(u.spans[0], u);
  CHECK(c.reparandum_length == LengthBucket::k3to5);
  CHECK(c.word_class == WordClass::kContentContent);
  CHECK(length_bucket(2) == LengthBucket::k1to2);
  CHECK(length_bucket(5) == LengthBucket::k3to5);
  CHECK(length_bucket(6) == LengthBucket::k6to8);
  CHECK(length_bucket(8) == LengthBucket::k6to8);
  CHECK(length_bucket(9) == LengthBucket::k9plus);

  const Utterance f = parse_markup("[ the/DT + a/DT ] was/VBD here/RB");
  CHECK(categorize(f.spans[0], f).word_class == WordClass::kFunctionFunction);
  CHECK_FALSE(is_content_word(f.tokens[2]));  // auxiliary
}

TEST_CASE("repetition ignores fragments") {
  const Utterance u = parse_markup("[ the- the + the ] cat");
  CHECK(u.tokens[0].is_fragment);
  CHECK(categorize(u.spans[0], u).kind == DisfluencyKind::kRepetition);
  MarkupOptions drop;
  drop.drop_fragments = true;
  CHECK(parse_markup("[ the- the + the ] cat", drop).tokens.size() == 3);
}

TEST_CASE("parse errors carry offsets") {
  auto offset_of = [](const char* text) -> std::size_t {
    try {
      parse_markup(text);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return static_cast<std::size_t>(-1);
  };
  CHECK(offset_of("a [ b + c") == 2);
  CHECK(offset_of("a b ] c") == 4);
  CHECK(offset_of("a + b") == 2);
  CHECK(offset_of("[ a b ]") == 6);
  CHECK(offset_of("[ + b ]") == 2);
  CHECK(offset_of("[ a + b + c ]") == 8);
}

TEST_CASE("render then parse is the identity on random nested markup") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> words = {"a/DT", "dog/NN", "ran/VBD", "uh/UH", "big/JJ", "you/PRP"};
  std::function<std::string(int)> region = [&](int depth) {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      if (depth < 3 && rng() % 4 == 0) {
        s += " [" + region(depth + 1) + " +";
        if (rng() % 2) s += " { uh/UH }";
        if (rng() % 3) s += region(depth + 1);
        s += " ]";
      } else {
        s += " " + words[rng() % words.size()];
      }
    }
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = region(0);
    const Utterance u = parse_markup(text);
    const Utterance back = parse_markup(render_markup(u));
    CHECK_MESSAGE(same_structure(u, back), text);
    CHECK(bio_consistent(u.labels));
    for (const auto& s : u.spans) {
      const bool brute_rep = [&] {
        if (!s.repair) return false;
        std::vector<std::string> rm, rp;
        for (std::size_t i = s.reparandum.begin; i < s.reparandum.end; ++i) {
          bool in_ir = false;
          for (const auto& o : u.spans) in_ir = in_ir || (o.interregnum && o.interregnum->contains(i));
          if (!in_ir && !u.tokens[i].is_fragment) rm.push_back(to_lower(u.tokens[i].surface));
        }
        for (std::size_t i = s.repair->begin; i < s.repair->end; ++i) {
          bool in_ir = false;
          for (const auto& o : u.spans) in_ir = in_ir || (o.interregnum && o.interregnum->contains(i));
          if (!in_ir && !u.tokens[i].is_fragment) rp.push_back(to_lower(u.tokens[i].surface));
        }
        return !rm.empty() && rp.size() >= rm.size() && std::equal(rm.begin(), rm.end(), rp.begin());
      }();
      CHECK((categorize(s, u).kind == DisfluencyKind::kRepetition) == brute_rep);
    }
  }
}

TEST_CASE("alignment: identity, substitution, insertion") {
  const std::vector<std::string> abc = {"a", "b", "c"};
  for (const auto& p : align_tokens(abc, abc)) CHECK(p.op == EditOp::kMatch);

  const std::vector<std::string> axc = {"a", "x", "c"};
  const auto sub = align_tokens(abc, axc);
  REQUIRE(sub.size() == 3);
  CHECK(sub[1].op == EditOp::kSubstitute);
  CHECK(sub[1].original == 1u);
  CHECK(edit_cost(sub) == 1);

  const std::vector<std::string> ab = {"a", "b"}, abb = {"a", "b", "b"};
  const auto ins = align_tokens(ab, abb);
  CHECK(edit_cost(ins) == 1);
  CHECK(std::count_if(ins.begin(), ins.end(), [](const AlignedPair& p) { return p.op == EditOp::kInsert; }) == 1);
}

TEST_CASE("alignment cost equals the brute-force minimum") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> x(rng() % 6), y(rng() % 6);
    for (auto& w : x) w = alphabet[rng() % 3];
    for (auto& w : y) w = alphabet[rng() % 3];
    const auto al = align_tokens(x, y);
    CHECK(edit_cost(al) == brute_edit(x, 0, y, 0));
    std::size_t oi = 0, ci = 0;
    for (const auto& p : al) {
      if (p.original) CHECK(*p.original == oi++);
      if (p.corrected) CHECK(*p.corrected == ci++);
    }
    CHECK(oi == x.size());
    CHECK(ci == y.size());
  }
}

TEST_CASE("silver remap") {
  const Utterance orig = parse_markup("i [ want + want ] to go");
  const LabelPredictor all_o = [](const Utterance& u) { return std::vector<Label>(u.tokens.size(), Label::kO); };
  const Utterance same = silver_remap(orig, orig.tokens, all_o);
  CHECK(same.labels == orig.labels);
  CHECK(same.spans == orig.spans);

  // Substitute the repair token: the tagger's label is used there only.
  std::vector<Token> corrected = orig.tokens;
  corrected[2].surface = "wanna";
  const LabelPredictor tagger = [](const Utterance& u) {
    std::vector<Label> l(u.tokens.size(), Label::kO);
    l[2] = Label::kBRp;
    return l;
  };
  const Utterance silver = silver_remap(orig, corrected, tagger);
  CHECK(silver.labels == std::vector<Label>{Label::kO, Label::kBRm, Label::kBRp, Label::kO, Label::kO});
  CHECK(bio_consistent(silver.labels));

  CHECK_THROWS_AS(silver_remap(orig, {}, all_o), Error);
}

TEST_CASE("lexicon parsing") {
  std::istringstream in(";;; comment\ncat\tK AE1 T\nuh  AH1\nread(2)  R EH1 D\nread  R IY1 D\n");
  const Lexicon lex = parse_lexicon(in, "lex");
  const auto cat = lex.lookup("cat");
  REQUIRE(cat.size() == 3);
  CHECK(cat[0] == Phone{"K", Stress::kNone});
  CHECK(cat[1] == Phone{"AE", Stress::kPrimary});
  CHECK(cat[2] == Phone{"T", Stress::kNone});
  CHECK(lex.lookup("zzz") == std::vector<Phone>{Phone{"UNK", Stress::kNone}});
  CHECK(lex.lookup("READ").size() == 3);
  CHECK(parse_phone("ER2").stress == Stress::kSecondary);

  Utterance u = parse_markup("uh you_know cat- dog");
  resolve_phones(u, lex);
  CHECK(u.tokens[0].phones == std::vector<Phone>{Phone{"AH", Stress::kPrimary}});
  CHECK(u.tokens[2].phones.size() == 3);  // fragment stem
  for (const auto& t : u.tokens) CHECK_FALSE(t.phones.empty());

  std::istringstream bad("cat K AE1 T\ndog D AO9 G\n");
  try {
    parse_lexicon(bad, "lex");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream empty_entry("cat\n");
  CHECK_THROWS_AS(parse_lexicon(empty_entry, "lex"), FormatError);
}

TEST_CASE("transcript and alignment files") {
  std::istringstream tr("u1\t[ a/DT + the/DT ] dog/NN\n\nu2\thello/UH\n");
  auto utts = parse_transcripts(tr, "t");
  REQUIRE(utts.size() == 2);
  CHECK(utts[0].id == "u1");
  std::istringstream al("u1\t0\ta\t0.000000\t0.100000\nu1\t1\tthe\t0.1\t0.2\nu1\t2\tdog\t0.3\t0.6\nu2\t0\thello\t0\t1\n");
  parse_alignments(al, "a", utts);
  CHECK(utts[0].tokens[2].start == doctest::Approx(0.3));
  std::istringstream mismatch("u2\t0\tbye\t0\t1\n");
  CHECK_THROWS_AS(parse_alignments(mismatch, "a", utts), FormatError);
  std::istringstream missing("u2\t0\thello\t0\t1\n");
  CHECK_THROWS_AS(parse_alignments(missing, "a", utts), Error);
  std::istringstream bad_markup("u1\t[ a + b\n");
  CHECK_THROWS_AS(parse_transcripts(bad_markup, "t"), FormatError);
}

TEST_CASE("token tables round-trip at 6 decimals") {
  TokenTable t;
  nn::Matrix m(2, 3);
  m(0, 0) = quantize6(0.1234567);
  m(1, 2) = quantize6(-3.0000004);
  t.emplace("x", m);
  std::ostringstream out;
  const auto path = std::filesystem::temp_directory_path() / "disfl_table_test.tsv";
  write_token_table(path, t, "v");
  const auto back = read_token_table(path, 3);
  CHECK(back.at("x") == m);
  CHECK_THROWS_AS(read_token_table(path, 4), FormatError);
  std::filesystem::remove(path);
}
