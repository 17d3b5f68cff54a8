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

#include "disfl/embeddings.hpp"

#include <fstream>
#include <sstream>

#include "disfl/corpus.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/error.hpp"
#include "disfl/nn/archive.hpp"

namespace disfl {

void Embeddings::add(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw ShapeError("embedding for '" + word + "' has dimension " + std::to_string(vec.size()) +
                     ", expected " + std::to_string(dim_));
  }
  const std::string key = to_lower(word);
  if (index_.count(key) != 0) return;  // first occurrence wins
  index_.emplace(key, words_.size());
  words_.push_back(key);
  auto& data = vectors_.data();
  data.insert(data.end(), vec.begin(), vec.end());
  vectors_ = nn::Matrix(words_.size(), dim_, std::move(data));
}

std::optional<std::size_t> Embeddings::index(std::string_view word) const {
  auto it = index_.find(to_lower(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Embeddings parse_embeddings(std::istream& in, const std::string& source) {
  Embeddings emb;
  bool first = true;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word, tok;
    if (!(ls >> word)) continue;
    std::vector<double> vec;
    while (ls >> tok) {
      try {
        vec.push_back(nn::parse_double(tok));
      } catch (const Error&) {
        throw FormatError(source, lineno, "not a number: '" + tok + "'");
      }
    }
    if (vec.empty()) throw FormatError(source, lineno, "word '" + word + "' has no vector");
    if (first) {
      emb = Embeddings(vec.size());
      first = false;
    } else if (vec.size() != emb.dim()) {
      throw FormatError(source, lineno, "dimension " + std::to_string(vec.size()) + " differs from " +
                                            std::to_string(emb.dim()));
    }
    emb.add(word, std::move(vec));
  }
  if (first) throw FormatError(source, lineno, "no embeddings found");
  return emb;
}

Embeddings load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings " + path.string());
  return parse_embeddings(in, path.string());
}

void save_embeddings(const Embeddings& emb, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < emb.size(); ++i) {
    out << emb.word(i);
    for (double v : emb.vector(i)) out << ' ' << format_fixed6(v);
    out << '\n';
  }
}

}  // namespace disfl
