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

#include "disfl/corpus_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "disfl/error.hpp"
#include "disfl/nn/archive.hpp"

namespace disfl {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

bool skip_line(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line.empty() || line[0] == '#' || line.rfind("utt_id\t", 0) == 0;
}

double field_double(const std::string& s, const std::string& source, std::size_t lineno) {
  try {
    return nn::parse_double(s);
  } catch (const Error&) {
    throw FormatError(source, lineno, "not a number: '" + s + "'");
  }
}

std::size_t field_index(const std::string& s, const std::string& source, std::size_t lineno) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError(source, lineno, "not a token index: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find('\t') != std::string::npos) {
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
  } else {
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) out.push_back(f);
  }
  return out;
}

double quantize6(double x) { return std::round(x * 1e6) / 1e6; }

std::string format_fixed6(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, quantize6(x), std::chars_format::fixed, 6);
  if (ec != std::errc()) throw Error("cannot format value");
  return std::string(buf, p);
}

std::vector<Utterance> parse_transcripts(std::istream& in, const std::string& source,
                                         const MarkupOptions& opts) {
  std::vector<Utterance> utts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(source, lineno, "expected 'utt_id<TAB>text'");
    Utterance u;
    try {
      u = parse_markup(std::string_view(line).substr(tab + 1), opts);
    } catch (const ParseError& e) {
      throw FormatError(source, lineno, e.what());
    }
    u.id = line.substr(0, tab);
    if (u.tokens.empty()) throw FormatError(source, lineno, "utterance '" + u.id + "' has no tokens");
    utts.push_back(std::move(u));
  }
  return utts;
}

std::vector<Utterance> read_transcripts(const std::filesystem::path& path, const MarkupOptions& opts) {
  auto in = open_in(path);
  return parse_transcripts(in, path.string(), opts);
}

void write_transcripts(const std::filesystem::path& path, const std::vector<Utterance>& utts) {
  auto out = open_out(path);
  for (const auto& u : utts) out << u.id << '\t' << render_markup(u) << '\n';
}

void parse_alignments(std::istream& in, const std::string& source, std::vector<Utterance>& utts) {
  std::unordered_map<std::string, Utterance*> by_id;
  std::unordered_map<std::string, std::vector<bool>> seen;
  for (auto& u : utts) {
    by_id[u.id] = &u;
    seen[u.id].assign(u.tokens.size(), false);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) throw FormatError(source, lineno, "expected 5 fields");
    auto it = by_id.find(f[0]);
    if (it == by_id.end()) continue;  // alignment for an utterance not loaded
    Utterance& u = *it->second;
    const std::size_t idx = field_index(f[1], source, lineno);
    if (idx >= u.tokens.size()) throw FormatError(source, lineno, "token index out of range for " + f[0]);
    Token& tok = u.tokens[idx];
    if (to_lower(tok.surface) != to_lower(f[2])) {
      throw FormatError(source, lineno, "word '" + f[2] + "' does not match token '" + tok.surface + "'");
    }
    tok.start = field_double(f[3], source, lineno);
    tok.end = field_double(f[4], source, lineno);
    if (tok.start < 0 || tok.end < tok.start) throw FormatError(source, lineno, "invalid time interval");
    seen[f[0]][idx] = true;
  }
  for (const auto& [id, flags] : seen) {
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (!flags[i]) throw Error(source + ": no alignment for " + id + " token " + std::to_string(i));
    }
  }
}

void read_alignments(const std::filesystem::path& path, std::vector<Utterance>& utts) {
  auto in = open_in(path);
  parse_alignments(in, path.string(), utts);
}

void write_alignments(const std::filesystem::path& path, const std::vector<Utterance>& utts) {
  auto out = open_out(path);
  out << "utt_id\ttoken_index\tword\tstart_s\tend_s\n";
  for (const auto& u : utts) {
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      const Token& t = u.tokens[i];
      out << u.id << '\t' << i << '\t' << t.surface << '\t' << format_fixed6(t.start) << '\t'
          << format_fixed6(t.end) << '\n';
    }
  }
}

TokenTable parse_token_table(std::istream& in, const std::string& source, std::size_t cols) {
  std::map<std::string, std::vector<std::vector<double>>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != cols + 2) {
      throw FormatError(source, lineno,
                        "expected " + std::to_string(cols + 2) + " fields, got " + std::to_string(f.size()));
    }
    auto& r = rows[f[0]];
    const std::size_t idx = field_index(f[1], source, lineno);
    if (idx != r.size()) throw FormatError(source, lineno, "token indices must be consecutive from 0");
    std::vector<double> v(cols);
    for (std::size_t c = 0; c < cols; ++c) v[c] = field_double(f[c + 2], source, lineno);
    r.push_back(std::move(v));
  }
  TokenTable table;
  for (auto& [id, r] : rows) {
    nn::Matrix m(r.size(), cols);
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t c = 0; c < cols; ++c) m(i, c) = r[i][c];
    }
    table.emplace(id, std::move(m));
  }
  return table;
}

TokenTable read_token_table(const std::filesystem::path& path, std::size_t cols) {
  auto in = open_in(path);
  return parse_token_table(in, path.string(), cols);
}

void write_token_table(const std::filesystem::path& path, const TokenTable& table,
                       const std::string& prefix) {
  auto out = open_out(path);
  const std::size_t cols = table.empty() ? 0 : table.begin()->second.cols();
  out << "utt_id\ttoken_index";
  for (std::size_t c = 0; c < cols; ++c) out << '\t' << prefix << '_' << c;
  out << '\n';
  for (const auto& [id, m] : table) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out << id << '\t' << i;
      for (std::size_t c = 0; c < m.cols(); ++c) out << '\t' << format_fixed6(m(i, c));
      out << '\n';
    }
  }
}

}  // namespace disfl
