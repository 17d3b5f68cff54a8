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
#include <utility>
#include <vector>

#include "disfl/nn/matrix.hpp"
#include "disfl/nn/parameters.hpp"

namespace disfl::nn {

// Self-describing model container: format version, model kind, an ordered
// config echo, named string vocabularies, and named arrays with shapes.
// Numbers are written in shortest round-trip form so load(save(x)) == x.
struct ModelArchive {
  static constexpr int kFormatVersion = 1;

  std::string kind;
  std::vector<std::pair<std::string, std::string>> config;
  std::map<std::string, std::vector<std::string>> vocabs;
  std::vector<std::pair<std::string, Matrix>> arrays;

  void set(const std::string& key, const std::string& value);
  // Throws ConfigError when missing.
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;

  void add_array(const std::string& name, Matrix value);
  const Matrix& array(const std::string& name) const;

  // Every parameter of `store`, by its own name.
  void add_store(const ParameterStore& store);
  // Copies arrays into same-named parameters; throws ShapeError on mismatch
  // and ConfigError when a parameter has no array.
  void load_store(ParameterStore& store) const;
};

void write_archive(const ModelArchive& archive, std::ostream& out);
ModelArchive read_archive(std::istream& in, const std::string& source = "<stream>");

void save_archive(const ModelArchive& archive, const std::filesystem::path& path);
ModelArchive load_archive(const std::filesystem::path& path);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace disfl::nn
