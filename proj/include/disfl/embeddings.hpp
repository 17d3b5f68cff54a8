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
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "disfl/nn/matrix.hpp"

namespace disfl {

// Pretrained word vectors read from a text file of `word v1 ... v_d` lines.
// Lookups are lower-cased.
class Embeddings {
 public:
  Embeddings() = default;
  explicit Embeddings(std::size_t dim) : dim_(dim) {}

  void add(const std::string& word, std::vector<double> vec);
  std::optional<std::size_t> index(std::string_view word) const;
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::span<const double> vector(std::size_t i) const { return vectors_.row(i); }
  // size() x dim() matrix of all vectors in insertion order.
  nn::Matrix matrix() const { return vectors_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  nn::Matrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Throws FormatError on ragged dimensions or non-numeric values.
Embeddings parse_embeddings(std::istream& in, const std::string& source);
Embeddings load_embeddings(const std::filesystem::path& path);
void save_embeddings(const Embeddings& emb, const std::filesystem::path& path);

}  // namespace disfl
