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

#include "disfl/nn/archive.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "disfl/error.hpp"

namespace disfl::nn {

namespace {
constexpr const char* kMagic = "disfl-model";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    // from_chars rejects a leading '+'; accept it for hand-written files.
    if (!text.empty() && text.front() == '+') return parse_double(text.substr(1));
    throw Error("invalid number '" + std::string(text) + "'");
  }
  return v;
}

void ModelArchive::set(const std::string& key, const std::string& value) {
  if (value.find('\n') != std::string::npos || key.find('=') != std::string::npos) {
    throw ConfigError("archive config entry '" + key + "' is not a single line");
  }
  for (auto& kv : config) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  config.emplace_back(key, value);
}

const std::string& ModelArchive::get(const std::string& key) const {
  for (const auto& kv : config) {
    if (kv.first == key) return kv.second;
  }
  throw ConfigError("model archive has no config key '" + key + "'");
}

bool ModelArchive::has(const std::string& key) const {
  for (const auto& kv : config) {
    if (kv.first == key) return true;
  }
  return false;
}

void ModelArchive::add_array(const std::string& name, Matrix value) {
  arrays.emplace_back(name, std::move(value));
}

const Matrix& ModelArchive::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.first == name) return a.second;
  }
  throw ConfigError("model archive has no array '" + name + "'");
}

void ModelArchive::add_store(const ParameterStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) add_array(store.at(i).name, store.at(i).value);
}

void ModelArchive::load_store(ParameterStore& store) const {
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    const Matrix& m = array(p.name);
    if (!m.same_shape(p.value)) {
      throw ShapeError("archive array '" + p.name + "' is " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", model expects " +
                       std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
    }
    p.value = m;
  }
}

void write_archive(const ModelArchive& a, std::ostream& out) {
  out << kMagic << ' ' << ModelArchive::kFormatVersion << '\n';
  out << "kind " << a.kind << '\n';
  out << "config " << a.config.size() << '\n';
  for (const auto& [k, v] : a.config) out << k << '=' << v << '\n';
  for (const auto& [name, tokens] : a.vocabs) {
    out << "vocab " << name << ' ' << tokens.size() << '\n';
    for (const auto& t : tokens) out << t << '\n';
  }
  for (const auto& [name, m] : a.arrays) {
    out << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_double(m(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

ModelArchive read_archive(std::istream& in, const std::string& source) {
  ModelArchive a;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char* what) -> std::string& {
    if (!std::getline(in, line)) throw FormatError(source, lineno + 1, std::string("expected ") + what);
    ++lineno;
    return line;
  };
  {
    std::istringstream hs(next("header"));
    std::string magic;
    int version = 0;
    hs >> magic >> version;
    if (magic != kMagic) throw FormatError(source, lineno, "not a disfl model file");
    if (version != ModelArchive::kFormatVersion) {
      throw FormatError(source, lineno, "unsupported format version " + std::to_string(version));
    }
  }
  {
    const std::string& l = next("kind");
    if (l.rfind("kind ", 0) != 0) throw FormatError(source, lineno, "expected 'kind'");
    a.kind = l.substr(5);
  }
  {
    std::istringstream cs(next("config"));
    std::string tag;
    std::size_t n = 0;
    cs >> tag >> n;
    if (tag != "config") throw FormatError(source, lineno, "expected 'config'");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& l = next("config entry");
      const auto eq = l.find('=');
      if (eq == std::string::npos) throw FormatError(source, lineno, "config entry without '='");
      a.config.emplace_back(l.substr(0, eq), l.substr(eq + 1));
    }
  }
  while (true) {
    std::istringstream ss(next("section"));
    std::string tag;
    ss >> tag;
    if (tag == "end") break;
    if (tag == "vocab") {
      std::string name;
      std::size_t n = 0;
      ss >> name >> n;
      std::vector<std::string> tokens;
      tokens.reserve(n);
      for (std::size_t i = 0; i < n; ++i) tokens.push_back(next("vocab token"));
      a.vocabs[name] = std::move(tokens);
    } else if (tag == "array") {
      std::string name;
      std::size_t rows = 0, cols = 0;
      if (!(ss >> name >> rows >> cols)) throw FormatError(source, lineno, "bad array header");
      Matrix m(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        std::istringstream rs(next("array row"));
        std::string tok;
        for (std::size_t c = 0; c < cols; ++c) {
          if (!(rs >> tok)) throw FormatError(source, lineno, "short array row in '" + name + "'");
          try {
            m(r, c) = parse_double(tok);
          } catch (const Error& e) {
            throw FormatError(source, lineno, e.what());
          }
        }
      }
      a.arrays.emplace_back(name, std::move(m));
    } else {
      throw FormatError(source, lineno, "unknown section '" + tag + "'");
    }
  }
  return a;
}

void save_archive(const ModelArchive& archive, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_archive(archive, out);
  if (!out) throw IoError("write failed for " + path.string());
}

ModelArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_archive(in, path.string());
}

}  // namespace disfl::nn
