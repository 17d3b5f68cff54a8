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

#include "disfl/run_config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "disfl/error.hpp"
#include "disfl/nn/archive.hpp"

namespace disfl {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) { return nn::format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string flag(bool v) { return v ? "true" : "false"; }

bool skipped_section(const std::string& key) {
  for (const char* p : {"manifest.", "input.", "output.", "metric."}) {
    if (key.rfind(p, 0) == 0) return true;
  }
  return false;
}

const std::map<std::string, std::string>& default_files() {
  static const std::map<std::string, std::string> kFiles = {
      {"train", "train.txt"},         {"dev", "dev.txt"},
      {"test", "test.txt"},           {"alignments", "alignments.tsv"},
      {"lexicon", "lexicon.txt"},     {"embeddings", "embeddings.txt"},
      {"cues", "cues.tsv"},           {"frames", "frames"},
      {"audio", "audio"},
  };
  return kFiles;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  auto& d = defaults_;
  for (const char* p : {"data", "train", "dev", "test", "alignments", "lexicon", "embeddings", "cues",
                        "frames", "audio", "prosody_model", "tagger_model", "innovations",
                        "predictions", "compare", "out"}) {
    d[std::string("paths.") + p] = "";
  }

  const SynthConfig s;
  d["synth.train"] = num(s.train);
  d["synth.dev"] = num(s.dev);
  d["synth.test"] = num(s.test);
  d["synth.disfluency_rate"] = num(s.disfluency_rate);
  d["synth.repetition"] = num(s.repetition);
  d["synth.rephrase"] = num(s.rephrase);
  d["synth.restart"] = num(s.restart);
  d["synth.nested"] = num(s.nested);
  d["synth.interregnum_rate"] = num(s.interregnum_rate);
  d["synth.lead_rate"] = num(s.lead_rate);
  d["synth.fluent_repetition_rate"] = num(s.fluent_repetition_rate);
  d["synth.filler_rate"] = num(s.filler_rate);
  d["synth.delta"] = num(s.delta);
  d["synth.nouns"] = num(s.nouns);
  d["synth.verbs"] = num(s.verbs);
  d["synth.adjectives"] = num(s.adjectives);
  d["synth.adverbs"] = num(s.adverbs);
  d["synth.embedding_dim"] = num(s.embedding_dim);
  d["synth.embedding_noise"] = num(s.embedding_noise);
  d["synth.write_frames"] = flag(s.write_frames);

  const MarkupOptions m;
  d["markup.drop_fragments"] = flag(m.drop_fragments);
  d["markup.split_contractions"] = flag(m.split_contractions);

  const dsp::DspConfig ds;
  d["dsp.frame_len"] = num(ds.frame_len);
  d["dsp.hop"] = num(ds.hop);
  d["dsp.mel_bands"] = num(ds.mel_bands);
  d["dsp.cepstra"] = num(ds.cepstra);
  d["dsp.preemphasis"] = num(ds.preemphasis);
  d["dsp.f0_min"] = num(ds.f0_min);
  d["dsp.f0_max"] = num(ds.f0_max);
  d["dsp.voicing_threshold"] = num(ds.voicing_threshold);

  const ProsodyConfig p;
  d["prosody.word_hidden"] = num(p.word_hidden);
  d["prosody.phone_hidden"] = num(p.phone_hidden);
  d["prosody.pos_dim"] = num(p.pos_dim);
  d["prosody.identity_dim"] = num(p.identity_dim);
  d["prosody.phone_dim"] = num(p.phone_dim);
  d["prosody.stress_dim"] = num(p.stress_dim);
  d["prosody.dropout"] = num(p.dropout);
  d["prosody.epochs"] = num(p.epochs);
  d["prosody.patience"] = num(p.patience);
  d["prosody.lr"] = num(p.adam.lr);
  d["prosody.clip_norm"] = num(p.adam.clip_norm);
  d["prosody.batch_size"] = num(p.batch_size);
  d["prosody.lr_decay"] = num(p.lr_decay);
  d["prosody.divisor"] = num(p.standardizer_divisor);

  const TaggerConfig t;
  d["tagger.pos_dim"] = num(t.pos_dim);
  d["tagger.identity_dim"] = num(t.identity_dim);
  d["tagger.hidden"] = num(t.hidden);
  d["tagger.prosody_hidden"] = num(t.prosody_hidden);
  d["tagger.projection"] = num(t.projection);
  d["tagger.dropout"] = num(t.dropout);
  d["tagger.epochs"] = num(t.epochs);
  d["tagger.patience"] = num(t.patience);
  d["tagger.lr"] = num(t.adam.lr);
  d["tagger.clip_norm"] = num(t.adam.clip_norm);
  d["tagger.lr_decay"] = num(t.lr_decay);
  d["tagger.word_match"] = flag(t.text.word_match);
  d["tagger.pos_match"] = flag(t.text.pos_match);
  d["tagger.match_distance"] = num(t.text.max_distance);

  d["fusion.features"] = t.fusion.features.to_string();
  d["fusion.mode"] = std::string(fusion_mode_name(t.fusion.mode));
  d["fusion.alpha"] = num(t.fusion.alpha);
  d["fusion.training"] = std::string(training_mode_name(t.fusion.training));
  d["fusion.lambda"] = num(t.fusion.lambda);

  std::string grid;
  for (double a : default_alpha_grid()) grid += (grid.empty() ? "" : ",") + num(a);
  d["alpha.grid"] = grid;

  d["run.seed"] = "1";
  d["run.seeds"] = "1";
  d["run.jobs"] = "1";
  d["run.split"] = "test";

  d["analysis.cue"] = "1";

  values_ = defaults_;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError(source, lineno, "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (skipped_section(key)) continue;
    try {
      cfg.set(key, trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw FormatError(source, lineno, e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  require_exists(path, "config file");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse(in, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!defaults_.count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

bool RunConfig::is_default(const std::string& key) const { return get(key) == defaults_.at(key); }

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    return nn::parse_double(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = to_lower(get(key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + get(key) + "'");
}

std::filesystem::path RunConfig::path(const std::string& name) const {
  const std::string& explicit_path = get("paths." + name);
  if (!explicit_path.empty()) return explicit_path;
  const auto it = default_files().find(name);
  const std::string& data = get("paths.data");
  if (it == default_files().end() || data.empty()) return {};
  return std::filesystem::path(data) / it->second;
}

SynthConfig RunConfig::synth() const {
  SynthConfig s;
  s.train = get_size("synth.train");
  s.dev = get_size("synth.dev");
  s.test = get_size("synth.test");
  s.disfluency_rate = get_double("synth.disfluency_rate");
  s.repetition = get_double("synth.repetition");
  s.rephrase = get_double("synth.rephrase");
  s.restart = get_double("synth.restart");
  s.nested = get_double("synth.nested");
  s.interregnum_rate = get_double("synth.interregnum_rate");
  s.lead_rate = get_double("synth.lead_rate");
  s.fluent_repetition_rate = get_double("synth.fluent_repetition_rate");
  s.filler_rate = get_double("synth.filler_rate");
  s.delta = get_double("synth.delta");
  s.nouns = get_size("synth.nouns");
  s.verbs = get_size("synth.verbs");
  s.adjectives = get_size("synth.adjectives");
  s.adverbs = get_size("synth.adverbs");
  s.embedding_dim = get_size("synth.embedding_dim");
  s.embedding_noise = get_double("synth.embedding_noise");
  s.write_frames = get_bool("synth.write_frames");
  s.validate();
  return s;
}

MarkupOptions RunConfig::markup() const {
  MarkupOptions m;
  m.drop_fragments = get_bool("markup.drop_fragments");
  m.split_contractions = get_bool("markup.split_contractions");
  return m;
}

dsp::DspConfig RunConfig::dsp() const {
  dsp::DspConfig d;
  d.frame_len = get_double("dsp.frame_len");
  d.hop = get_double("dsp.hop");
  d.mel_bands = get_size("dsp.mel_bands");
  d.cepstra = get_size("dsp.cepstra");
  d.preemphasis = get_double("dsp.preemphasis");
  d.f0_min = get_double("dsp.f0_min");
  d.f0_max = get_double("dsp.f0_max");
  d.voicing_threshold = get_double("dsp.voicing_threshold");
  if (!(d.frame_len > 0) || !(d.hop > 0)) throw ConfigError("dsp.frame_len and dsp.hop must be positive");
  if (d.cepstra != 13) throw ConfigError("dsp.cepstra must be 13 (the cue layout has 13 MFCC columns)");
  if (!(d.f0_min > 0) || !(d.f0_max > d.f0_min)) throw ConfigError("dsp.f0_min/f0_max must satisfy 0 < min < max");
  return d;
}

ProsodyConfig RunConfig::prosody() const {
  ProsodyConfig p;
  p.word_hidden = get_size("prosody.word_hidden");
  p.phone_hidden = get_size("prosody.phone_hidden");
  p.pos_dim = get_size("prosody.pos_dim");
  p.identity_dim = get_size("prosody.identity_dim");
  p.phone_dim = get_size("prosody.phone_dim");
  p.stress_dim = get_size("prosody.stress_dim");
  p.dropout = get_double("prosody.dropout");
  p.epochs = get_size("prosody.epochs");
  p.patience = get_size("prosody.patience");
  p.adam.lr = get_double("prosody.lr");
  p.adam.clip_norm = get_double("prosody.clip_norm");
  p.batch_size = get_size("prosody.batch_size");
  p.lr_decay = get_double("prosody.lr_decay");
  p.standardizer_divisor = get_double("prosody.divisor");
  p.seed = get_u64("run.seed");
  p.validate();
  return p;
}

TaggerConfig RunConfig::tagger() const {
  TaggerConfig t;
  t.fusion.features = FeatureSelection::parse(get("fusion.features"));
  t.fusion.mode = parse_fusion_mode(get("fusion.mode"));
  t.fusion.alpha = get_double("fusion.alpha");
  t.fusion.training = parse_training_mode(get("fusion.training"));
  t.fusion.lambda = get_double("fusion.lambda");
  t.text.word_match = get_bool("tagger.word_match");
  t.text.pos_match = get_bool("tagger.pos_match");
  t.text.max_distance = get_size("tagger.match_distance");
  t.pos_dim = get_size("tagger.pos_dim");
  t.identity_dim = get_size("tagger.identity_dim");
  t.hidden = get_size("tagger.hidden");
  t.prosody_hidden = get_size("tagger.prosody_hidden");
  t.projection = get_size("tagger.projection");
  t.dropout = get_double("tagger.dropout");
  t.epochs = get_size("tagger.epochs");
  t.patience = get_size("tagger.patience");
  t.adam.lr = get_double("tagger.lr");
  t.adam.clip_norm = get_double("tagger.clip_norm");
  t.lr_decay = get_double("tagger.lr_decay");
  t.seed = get_u64("run.seed");
  t.validate();
  return t;
}

std::vector<double> RunConfig::alpha_grid() const {
  std::vector<double> grid;
  for (const std::string& a : split_csv(get("alpha.grid"))) {
    double v = 0.0;
    try {
      v = nn::parse_double(a);
    } catch (const std::exception&) {
      throw ConfigError("alpha.grid: bad value '" + a + "'");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("alpha.grid: " + a + " is outside [0, 1]");
    grid.push_back(v);
  }
  return grid;
}

std::vector<std::uint64_t> RunConfig::seeds() const {
  const std::string& value = get("run.seeds");
  std::vector<std::uint64_t> out;
  if (value.find(',') == std::string::npos) {
    const std::uint64_t n = get_u64("run.seeds");
    if (n == 0) throw ConfigError("run.seeds must be at least 1");
    const std::uint64_t base = get_u64("run.seed");
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(base + i);
    return out;
  }
  for (const std::string& s : split_csv(value)) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("run.seeds: bad seed '" + s + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::size_t RunConfig::jobs() const {
  const std::size_t j = get_size("run.jobs");
  if (j == 0) throw ConfigError("run.jobs must be at least 1");
  return j;
}

void RunConfig::validate() const {
  synth();
  markup();
  dsp();
  prosody();
  tagger();
  alpha_grid();
  seeds();
  jobs();
  get_size("analysis.cue");
  const std::string& split = get("run.split");
  if (split != "train" && split != "dev" && split != "test") {
    throw ConfigError("run.split must be train, dev or test, got '" + split + "'");
  }
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &len);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
      out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return out.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void Manifest::add_input(const std::string& name, const std::filesystem::path& path) {
  inputs_.emplace_back(name + ".path", path.string());
  if (std::filesystem::is_directory(path)) {
    // Directory inputs hash as the sorted list of (name, file hash).
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files) listing += f.filename().string() + " " + sha256_file(f) + "\n";
    Sha256 h;
    h.update(listing.data(), listing.size());
    inputs_.emplace_back(name + ".files", std::to_string(files.size()));
    inputs_.emplace_back(name + ".sha256", h.hex());
  } else {
    inputs_.emplace_back(name + ".sha256", sha256_file(path));
  }
}

void Manifest::add_output(const std::string& name, const std::filesystem::path& path) {
  outputs_.emplace_back(name, path.string());
}

void Manifest::add_metric(const std::string& name, double value) {
  metrics_.emplace_back(name, nn::format_double(value));
}

void Manifest::add_metric(const std::string& name, const std::string& value) {
  metrics_.emplace_back(name, value);
}

void Manifest::write(std::ostream& out, const RunConfig& cfg) const {
  out << "# disfl run manifest; usable as --config to repeat the run\n";
  out << "manifest.command = " << command_ << "\n";
  out << "manifest.format = 1\n";
  // The output location is where the manifest itself lives, so it is left
  // out; rerunning from a manifest takes a fresh --out.
  for (const auto& [k, v] : cfg.entries()) {
    if (k != "paths.out") out << k << " = " << v << "\n";
  }
  for (const auto& [k, v] : inputs_) out << "input." << k << " = " << v << "\n";
  for (const auto& [k, v] : outputs_) out << "output." << k << " = " << v << "\n";
  for (const auto& [k, v] : metrics_) out << "metric." << k << " = " << v << "\n";
}

void Manifest::save(const std::filesystem::path& path, const RunConfig& cfg) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write(out, cfg);
}

void require_exists(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw IoError(what + ": no path given");
  if (!std::filesystem::exists(path)) throw IoError(what + " not found: " + path.string());
}

}  // namespace disfl
