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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/dsp.hpp"
#include "disfl/prosody_predictor.hpp"
#include "disfl/synth.hpp"
#include "disfl/tagger.hpp"

namespace disfl {

// Flat `section.key = value` settings. Every accepted key has a default, so
// the resolved map is a complete description of a run. Unknown keys are
// rejected. Keys under manifest., input., output. and metric. are skipped on
// load, which lets a run manifest be fed back in as a config file.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::istream& in, const std::string& source);
  static RunConfig load(const std::filesystem::path& path);

  // Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  // "key=value"
  void set_assignment(const std::string& assignment);
  const std::string& get(const std::string& key) const;
  bool is_default(const std::string& key) const;

  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  // `paths.<name>` when set, else `paths.data/<default file>`, else empty.
  std::filesystem::path path(const std::string& name) const;

  SynthConfig synth() const;
  MarkupOptions markup() const;
  dsp::DspConfig dsp() const;
  ProsodyConfig prosody() const;
  TaggerConfig tagger() const;
  std::vector<double> alpha_grid() const;
  // run.seeds is either a count N (seeds run.seed .. run.seed+N-1) or a
  // comma-separated list.
  std::vector<std::uint64_t> seeds() const;
  std::size_t jobs() const;

  // Builds every typed view once; throws ConfigError on the first bad value.
  void validate() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> defaults_;
};

// Hex SHA-256 of a file's bytes. Throws IoError naming the path.
std::string sha256_file(const std::filesystem::path& path);

// Run record written next to every command's outputs.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void add_input(const std::string& name, const std::filesystem::path& path);
  void add_output(const std::string& name, const std::filesystem::path& path);
  void add_metric(const std::string& name, double value);
  void add_metric(const std::string& name, const std::string& value);

  void write(std::ostream& out, const RunConfig& cfg) const;
  void save(const std::filesystem::path& path, const RunConfig& cfg) const;

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::pair<std::string, std::string>> metrics_;
};

// Throws IoError naming the first path that does not exist.
void require_exists(const std::filesystem::path& path, const std::string& what);

}  // namespace disfl
