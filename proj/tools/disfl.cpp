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

// Command-line driver. Every command reads a resolved RunConfig (defaults,
// then --config file, then flags), validates it before touching data, writes
// its outputs into --out and records a manifest there.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <list>
#include <mutex>
#include <sstream>
#include <thread>

#include "disfl/analysis.hpp"
#include "disfl/corpus_io.hpp"
#include "disfl/dsp.hpp"
#include "disfl/error.hpp"
#include "disfl/nn/archive.hpp"
#include "disfl/prosody_features.hpp"
#include "disfl/prosody_predictor.hpp"
#include "disfl/run_config.hpp"
#include "disfl/synth.hpp"
#include "disfl/tagger.hpp"

namespace fs = std::filesystem;
using namespace disfl;

namespace {

// Runs fn(0..n-1) on up to `jobs` threads. The first failure by index is
// rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(jobs, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string prf(const Scores& s) {
  std::ostringstream out;
  out << std::setprecision(4) << "P=" << s.precision << " R=" << s.recall << " F1=" << s.f1;
  return out.str();
}

struct Binding {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
  bool is_flag = false;
};

// One subcommand plus the flags that map onto config keys.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help)
      : app_(parent.add_subcommand(name, help)) {
    app_->add_option("--config", config_file_, "key = value config file (a manifest also works)");
    app_->add_option("--set", assignments_, "override any config key: --set section.key=value");
    bind("--data", "paths.data", "corpus directory in the standard layout");
    bind("--out", "paths.out", "output directory");
    bind("--seed", "run.seed", "random seed");
    bind("--jobs", "run.jobs", "worker threads");
  }

  CLI::App* app() { return app_; }

  void bind(const std::string& flag, const std::string& key, const std::string& help) {
    Binding& b = bindings_.emplace_back();
    b.key = key;
    b.option = app_->add_option(flag, b.value, help + " [" + key + "]");
  }

  void bind_flag(const std::string& flag, const std::string& key, const std::string& help) {
    Binding& b = bindings_.emplace_back();
    b.key = key;
    b.is_flag = true;
    std::string desc = help + " [" + key + "]";
    b.option = app_->add_flag(flag, desc);
  }

  // Defaults, then the config file, then --set, then dedicated flags.
  RunConfig resolve() const {
    RunConfig cfg = config_file_.empty() ? RunConfig() : RunConfig::load(config_file_);
    for (const auto& a : assignments_) cfg.set_assignment(a);
    for (const auto& b : bindings_) {
      if (b.option->count() == 0) continue;
      cfg.set(b.key, b.is_flag ? "true" : b.value);
    }
    cfg.validate();
    return cfg;
  }

 private:
  CLI::App* app_;
  std::string config_file_;
  std::vector<std::string> assignments_;
  std::list<Binding> bindings_;
};

fs::path output_dir(const RunConfig& cfg) {
  const std::string& out = cfg.get("paths.out");
  if (out.empty()) throw ConfigError("no output directory: pass --out or set paths.out");
  fs::create_directories(out);
  return out;
}

fs::path required_path(const RunConfig& cfg, const std::string& name, const std::string& what) {
  const fs::path p = cfg.path(name);
  if (p.empty()) throw ConfigError(what + ": set paths." + name + " or paths.data");
  require_exists(p, what);
  return p;
}

std::vector<Utterance> load_split(const RunConfig& cfg, const std::string& split, Manifest& m,
                                  const Lexicon* lexicon) {
  const fs::path p = required_path(cfg, split, split + " transcripts");
  auto utts = read_transcripts(p, cfg.markup());
  if (lexicon != nullptr) {
    for (auto& u : utts) resolve_phones(u, *lexicon);
  }
  m.add_input(split, p);
  return utts;
}

Lexicon load_lexicon_input(const RunConfig& cfg, Manifest& m) {
  const fs::path p = required_path(cfg, "lexicon", "lexicon");
  m.add_input("lexicon", p);
  return load_lexicon(p);
}

Embeddings load_embeddings_input(const RunConfig& cfg, Manifest& m) {
  const fs::path p = required_path(cfg, "embeddings", "embeddings");
  m.add_input("embeddings", p);
  return load_embeddings(p);
}

TokenTable load_cues_input(const RunConfig& cfg, Manifest& m) {
  const fs::path p = required_path(cfg, "cues", "cue table");
  m.add_input("cues", p);
  return read_token_table(p, kNumCues);
}

// ---- synth ---------------------------------------------------------------

int run_synth(const RunConfig& cfg) {
  const fs::path out = output_dir(cfg);
  const SynthConfig sc = cfg.synth();
  const SynthCorpus corpus = synth_generate(cfg.get_u64("run.seed"), sc);
  write_synth_corpus(corpus, out, sc.write_frames);

  Manifest m("synth");
  for (const char* f : {"train.txt", "dev.txt", "test.txt", "alignments.tsv", "cues.tsv", "lexicon.txt",
                        "embeddings.txt"}) {
    m.add_output(f, f);
  }
  if (sc.write_frames) m.add_output("frames", "frames");
  std::size_t disfluent = 0, total = 0;
  for (const auto* split : {&corpus.train, &corpus.dev, &corpus.test}) {
    for (const auto& u : *split) {
      ++total;
      if (!u.fluent()) ++disfluent;
    }
  }
  m.add_metric("utterances", std::to_string(total));
  m.add_metric("disfluent_utterances", std::to_string(disfluent));
  m.save(out / "manifest.txt", cfg);
  std::cout << "wrote " << total << " utterances (" << disfluent << " disfluent) to " << out.string() << "\n";
  return 0;
}

// ---- features ------------------------------------------------------------

int run_features(const RunConfig& cfg) {
  Manifest m("features");
  std::vector<Utterance> utts;
  for (const char* split : {"train", "dev", "test"}) {
    const fs::path p = cfg.path(split);
    if (p.empty() || !fs::exists(p)) continue;
    auto part = load_split(cfg, split, m, nullptr);
    utts.insert(utts.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (utts.empty()) throw ConfigError("features: no transcripts found (set paths.data or paths.train/dev/test)");
  const fs::path align = required_path(cfg, "alignments", "alignments");
  m.add_input("alignments", align);
  read_alignments(align, utts);

  const fs::path frames = cfg.path("frames");
  const fs::path audio = cfg.path("audio");
  const bool use_frames = !frames.empty() && fs::is_directory(frames);
  if (!use_frames) {
    if (audio.empty() || !fs::is_directory(audio)) {
      throw IoError("features: neither a frames directory (" + frames.string() + ") nor an audio directory (" +
                    audio.string() + ") exists");
    }
  }
  const fs::path source = use_frames ? frames : audio;
  const dsp::DspConfig dcfg = cfg.dsp();
  const fs::path out = output_dir(cfg);

  std::vector<nn::Matrix> cues(utts.size());
  std::vector<std::size_t> clamped(utts.size(), 0);
  parallel_for(utts.size(), cfg.jobs(), [&](std::size_t i) {
    const Utterance& u = utts[i];
    dsp::FrameFeatures f;
    if (use_frames) {
      const fs::path p = source / (u.id + ".tsv");
      require_exists(p, "frame features");
      f = dsp::read_frame_features(p);
    } else {
      const fs::path p = source / (u.id + ".wav");
      require_exists(p, "audio");
      f = dsp::compute_frame_features(dsp::read_wav(p), dcfg);
    }
    AssembleStats stats;
    cues[i] = assemble_cues(u, f, &stats);
    clamped[i] = stats.clamped_pauses;
  });
  m.add_input(use_frames ? "frames" : "audio", source);

  TokenTable table;
  std::size_t total_clamped = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    table.emplace(utts[i].id, std::move(cues[i]));
    total_clamped += clamped[i];
  }
  write_token_table(out / "cues.tsv", table, "cue");
  m.add_output("cues", "cues.tsv");
  m.add_metric("utterances", std::to_string(utts.size()));
  m.add_metric("clamped_pauses", std::to_string(total_clamped));
  m.save(out / "manifest.txt", cfg);
  if (total_clamped > 0) std::cerr << "warning: " << total_clamped << " overlapping alignments clamped to zero pause\n";
  std::cout << "wrote cues for " << utts.size() << " utterances to " << (out / "cues.tsv").string() << "\n";
  return 0;
}

// ---- train-prosody ---------------------------------------------------------

int run_train_prosody(const RunConfig& cfg) {
  const ProsodyConfig pc = cfg.prosody();
  Manifest m("train-prosody");
  const Lexicon lex = load_lexicon_input(cfg, m);
  const auto train = load_split(cfg, "train", m, &lex);
  const auto dev = load_split(cfg, "dev", m, &lex);
  const Embeddings emb = load_embeddings_input(cfg, m);
  const TokenTable cues = load_cues_input(cfg, m);
  const fs::path out = output_dir(cfg);

  const Standardizer st = Standardizer::fit(train, cues, pc.standardizer_divisor);
  ProsodyModel model = ProsodyModel::create(pc, train, emb, st);
  const ProsodyTrainReport r = train_prosody(model, train, dev, cues);
  model.save(out / "prosody.model");

  m.add_output("model", "prosody.model");
  m.add_metric("fluent_train_utterances", std::to_string(r.fluent_train));
  m.add_metric("initial_dev_nll", r.initial_dev_nll);
  for (std::size_t e = 0; e < r.dev_nll.size(); ++e) {
    m.add_metric("epoch." + std::to_string(e + 1) + ".train_nll", r.train_nll[e]);
    m.add_metric("epoch." + std::to_string(e + 1) + ".dev_nll", r.dev_nll[e]);
  }
  m.add_metric("best_epoch", std::to_string(r.best_epoch));
  m.add_metric("best_dev_nll", r.best_dev_nll);
  m.save(out / "manifest.txt", cfg);
  std::cout << "dev NLL per token: " << r.initial_dev_nll << " -> " << r.best_dev_nll << " (epoch " << r.best_epoch
            << ")\n";
  return 0;
}

// ---- innovate --------------------------------------------------------------

int run_innovate(const RunConfig& cfg) {
  Manifest m("innovate");
  const fs::path model_path = required_path(cfg, "prosody_model", "prosody model");
  m.add_input("prosody_model", model_path);
  ProsodyModel model = ProsodyModel::load(model_path);
  const Lexicon lex = load_lexicon_input(cfg, m);
  const TokenTable cues = load_cues_input(cfg, m);
  const fs::path out = output_dir(cfg);

  std::vector<Utterance> utts;
  for (const char* split : {"train", "dev", "test"}) {
    const fs::path p = cfg.path(split);
    if (p.empty() || !fs::exists(p)) continue;
    auto part = load_split(cfg, split, m, &lex);
    utts.insert(utts.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (utts.empty()) throw ConfigError("innovate: no transcripts found (set paths.data or paths.train/dev/test)");

  // Each worker uses its own copy of the model; tapes are not shared.
  const std::size_t jobs = std::min(cfg.jobs(), utts.size());
  std::vector<ProsodyModel> copies;
  for (std::size_t j = 1; j < jobs; ++j) copies.push_back(ProsodyModel::from_archive(model.to_archive()));
  std::vector<nn::Matrix> z(utts.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](std::size_t w) {
    ProsodyModel& local = w == 0 ? model : copies[w - 1];
    try {
      for (std::size_t i = next++; i < utts.size(); i = next++) {
        const auto it = cues.find(utts[i].id);
        if (it == cues.end()) throw ConfigError("innovate: no cues for utterance " + utts[i].id);
        z[i] = local.innovations(utts[i], it->second);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < jobs; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  TokenTable table;
  for (std::size_t i = 0; i < utts.size(); ++i) table.emplace(utts[i].id, std::move(z[i]));
  write_token_table(out / "innovations.tsv", table, "z");
  m.add_output("innovations", "innovations.tsv");
  m.add_metric("utterances", std::to_string(utts.size()));
  m.save(out / "manifest.txt", cfg);
  std::cout << "wrote innovations for " << utts.size() << " utterances to "
            << (out / "innovations.tsv").string() << "\n";
  return 0;
}

// ---- tagger training (train-tagger, tune-alpha) -----------------------------

struct TaggerData {
  std::vector<Utterance> train, dev, test;
  Embeddings embeddings;
  TokenTable cues;
  TokenTable innovations;
  bool has_cues = false;
  bool has_innovations = false;
  std::unique_ptr<ProsodyModel> prosody;
  Standardizer standardizer;

  TaggerInputs inputs() const {
    return {has_cues ? &cues : nullptr, has_innovations ? &innovations : nullptr};
  }
};

TaggerData load_tagger_data(const RunConfig& cfg, const TaggerConfig& tc, Manifest& m, bool need_test) {
  TaggerData d;
  const bool prosodic = tc.fusion.features.prosodic();
  std::optional<Lexicon> lex;
  if (tc.fusion.features.innovations) lex = load_lexicon_input(cfg, m);
  const Lexicon* lp = lex ? &*lex : nullptr;
  d.train = load_split(cfg, "train", m, lp);
  d.dev = load_split(cfg, "dev", m, lp);
  if (need_test) d.test = load_split(cfg, "test", m, lp);
  d.embeddings = load_embeddings_input(cfg, m);
  if (prosodic) {
    d.cues = load_cues_input(cfg, m);
    d.has_cues = true;
  }
  if (tc.fusion.features.innovations) {
    const fs::path p = required_path(cfg, "prosody_model", "prosody model");
    m.add_input("prosody_model", p);
    d.prosody = std::make_unique<ProsodyModel>(ProsodyModel::load(p));
    // Precomputed innovations only make sense for a frozen predictor.
    const fs::path z = cfg.path("innovations");
    if (!z.empty() && tc.fusion.training == TrainingMode::kDisjoint) {
      require_exists(z, "innovation table");
      m.add_input("innovations", z);
      d.innovations = read_token_table(z, kNumCues);
      d.has_innovations = true;
    }
  } else if (prosodic) {
    d.standardizer = Standardizer::fit(d.train, d.cues, cfg.get_double("prosody.divisor"));
  }
  return d;
}

struct SeedResult {
  std::uint64_t seed = 0;
  TaggerTrainReport report;
  Scores dev, test;
  std::vector<std::vector<Label>> dev_pred, test_pred;
  std::unique_ptr<TaggerModel> model;
};

SeedResult train_one(const TaggerConfig& base, std::uint64_t seed, const TaggerData& d, bool with_test) {
  TaggerConfig tc = base;
  tc.seed = seed;
  SeedResult r;
  r.seed = seed;
  r.model = std::make_unique<TaggerModel>(TaggerModel::create(tc, d.train, d.embeddings, d.standardizer, d.prosody.get()));
  const TaggerInputs in = d.inputs();
  r.report = train_tagger(*r.model, d.train, d.dev, in);
  r.dev_pred = r.model->decode_all(d.dev, in);
  std::vector<std::vector<Label>> gold;
  for (const auto& u : d.dev) gold.push_back(u.labels);
  r.dev = evaluate(r.dev_pred, gold);
  if (with_test) {
    r.test_pred = r.model->decode_all(d.test, in);
    gold.clear();
    for (const auto& u : d.test) gold.push_back(u.labels);
    r.test = evaluate(r.test_pred, gold);
  }
  return r;
}

int run_train_tagger(const RunConfig& cfg) {
  const TaggerConfig tc = cfg.tagger();
  const auto seeds = cfg.seeds();
  Manifest m("train-tagger");
  const TaggerData d = load_tagger_data(cfg, tc, m, true);
  const fs::path out = output_dir(cfg);

  std::vector<SeedResult> results(seeds.size());
  std::mutex print;
  parallel_for(seeds.size(), cfg.jobs(), [&](std::size_t i) {
    results[i] = train_one(tc, seeds[i], d, true);
    const fs::path dir = out / ("seed-" + std::to_string(seeds[i]));
    fs::create_directories(dir);
    results[i].model->save(dir / "tagger.model");
    write_predictions(dir / "dev.pred.tsv", d.dev, results[i].dev_pred);
    write_predictions(dir / "test.pred.tsv", d.test, results[i].test_pred);
    std::lock_guard lock(print);
    std::cout << "seed " << seeds[i] << ": dev " << prf(results[i].dev) << " | test " << prf(results[i].test) << "\n";
  });

  std::vector<double> dev_f1, test_f1;
  for (const auto& r : results) {
    const std::string s = "seed." + std::to_string(r.seed);
    const std::string dir = "seed-" + std::to_string(r.seed);
    m.add_output(s + ".model", dir + "/tagger.model");
    m.add_output(s + ".dev_predictions", dir + "/dev.pred.tsv");
    m.add_output(s + ".test_predictions", dir + "/test.pred.tsv");
    m.add_metric(s + ".best_epoch", std::to_string(r.report.best_epoch));
    m.add_metric(s + ".dev_f1", r.dev.f1);
    m.add_metric(s + ".test_f1", r.test.f1);
    dev_f1.push_back(r.dev.f1);
    test_f1.push_back(r.test.f1);
  }
  const SeedSummary ds = summarize_seeds(seeds, dev_f1);
  const SeedSummary ts = summarize_seeds(seeds, test_f1);
  m.add_metric("dev_f1.mean", ds.mean);
  m.add_metric("dev_f1.best", ds.best);
  m.add_metric("test_f1.mean", ts.mean);
  m.add_metric("test_f1.best", ts.best);
  m.save(out / "manifest.txt", cfg);
  std::cout << std::setprecision(4) << "dev F1 mean=" << ds.mean << " best=" << ds.best << " | test F1 mean=" << ts.mean
            << " best=" << ts.best << " over " << seeds.size() << " seed(s)\n";
  return 0;
}

int run_tune_alpha(const RunConfig& cfg) {
  const TaggerConfig tc = cfg.tagger();
  if (tc.fusion.mode != FusionMode::kLate) throw ConfigError("tune-alpha needs fusion.mode = late");
  const auto grid = cfg.alpha_grid();
  const std::uint64_t seed = cfg.get_u64("run.seed");
  Manifest m("tune-alpha");
  const TaggerData d = load_tagger_data(cfg, tc, m, false);
  const fs::path out = output_dir(cfg);

  std::vector<double> f1(grid.size());
  parallel_for(grid.size(), cfg.jobs(), [&](std::size_t i) {
    TaggerConfig t = tc;
    t.fusion.alpha = grid[i];
    f1[i] = train_one(t, seed, d, false).dev.f1;
  });
  std::map<double, double> by_alpha;
  for (std::size_t i = 0; i < grid.size(); ++i) by_alpha[grid[i]] = f1[i];
  const AlphaSearch s = tune_alpha(grid, [&](double a) { return by_alpha.at(a); });

  std::ofstream tsv(out / "alpha.tsv");
  tsv << "alpha\tdev_f1\n";
  for (const auto& [a, f] : s.scores) {
    tsv << nn::format_double(a) << "\t" << nn::format_double(f) << "\n";
    m.add_metric("alpha." + nn::format_double(a) + ".dev_f1", f);
  }
  m.add_output("scores", "alpha.tsv");
  m.add_metric("best_alpha", s.best_alpha);
  m.add_metric("best_dev_f1", s.best_f1);
  m.save(out / "manifest.txt", cfg);
  std::cout << std::setprecision(4) << "best alpha=" << s.best_alpha << " dev F1=" << s.best_f1 << "\n";
  return 0;
}

// ---- eval ----------------------------------------------------------------

int run_eval(const RunConfig& cfg) {
  Manifest m("eval");
  std::vector<std::vector<Label>> gold, pred;
  const fs::path model_path = cfg.path("tagger_model");
  std::optional<fs::path> written;
  if (!model_path.empty()) {
    require_exists(model_path, "tagger model");
    m.add_input("tagger_model", model_path);
    TaggerModel model = TaggerModel::load(model_path);
    const std::string split = cfg.get("run.split");
    std::optional<Lexicon> lex;
    if (model.config().fusion.features.innovations) lex = load_lexicon_input(cfg, m);
    const auto utts = load_split(cfg, split, m, lex ? &*lex : nullptr);
    TokenTable cues;
    TaggerInputs in;
    if (model.config().fusion.features.prosodic()) {
      cues = load_cues_input(cfg, m);
      in.raw_cues = &cues;
    }
    pred = model.decode_all(utts, in);
    for (const auto& u : utts) gold.push_back(u.labels);
    const fs::path out = output_dir(cfg);
    write_predictions(out / (split + ".pred.tsv"), utts, pred);
    m.add_output("predictions", split + ".pred.tsv");
    written = out;
  } else {
    const fs::path p = cfg.path("predictions");
    if (p.empty()) throw ConfigError("eval: pass --predictions FILE or --model FILE");
    require_exists(p, "prediction file");
    m.add_input("predictions", p);
    for (auto& seq : group_predictions(read_predictions(p))) {
      gold.push_back(std::move(seq.gold));
      pred.push_back(std::move(seq.predicted));
    }
  }
  const Scores s = evaluate(pred, gold);
  m.add_metric("true_positives", std::to_string(s.true_positives));
  m.add_metric("predicted", std::to_string(s.predicted));
  m.add_metric("gold", std::to_string(s.gold));
  m.add_metric("precision", s.precision);
  m.add_metric("recall", s.recall);
  m.add_metric("f1", s.f1);
  if (!cfg.get("paths.out").empty()) {
    m.save(output_dir(cfg) / "manifest.txt", cfg);
  }
  std::cout << prf(s) << "\n";
  return 0;
}

// ---- analyze -------------------------------------------------------------

int run_analyze(const RunConfig& cfg) {
  Manifest m("analyze");
  const std::string split = cfg.get("run.split");
  const auto gold = load_split(cfg, split, m, nullptr);
  const fs::path pred_path = required_path(cfg, "predictions", "prediction file");
  m.add_input("predictions", pred_path);
  const auto pred_a = group_predictions(read_predictions(pred_path));
  const fs::path out = output_dir(cfg);

  const BreakdownReport r = breakdown(gold, align_predictions(gold, pred_a));
  write_breakdown_tsv(out / "breakdown.tsv", r);
  const std::string text = render_breakdown(r);
  std::ofstream(out / "breakdown.txt") << text;
  m.add_output("breakdown", "breakdown.tsv");
  m.add_output("breakdown_text", "breakdown.txt");
  m.add_metric("recall", r.total.recall());
  m.add_metric("fluent_repetition_fp_rate", r.fluent_repetition_fp_rate());
  for (const auto& [kind, cell] : r.by_kind) {
    m.add_metric("recall." + std::string(kind_name(kind)), cell.recall());
  }
  std::cout << text;

  const fs::path compare = cfg.path("compare");
  if (!compare.empty()) {
    require_exists(compare, "comparison prediction file");
    m.add_input("compare", compare);
    const ModelDiff diff = model_diff(pred_a, group_predictions(read_predictions(compare)), gold);
    std::ofstream(out / "model_diff.txt") << render_model_diff(diff);
    m.add_output("model_diff", "model_diff.txt");
    m.add_metric("a_better", std::to_string(diff.a_better.size()));
    m.add_metric("b_better", std::to_string(diff.b_better.size()));
    std::cout << "sentences where A is better: " << diff.a_better.size()
              << ", B is better: " << diff.b_better.size() << "\n";
  }

  const fs::path z = cfg.path("innovations");
  if (!z.empty()) {
    require_exists(z, "innovation table");
    m.add_input("innovations", z);
    const std::size_t cue = cfg.get_size("analysis.cue");
    const InnovationHistogram h = innovation_histogram(read_token_table(z, kNumCues), gold, cue);
    write_histogram_tsv(out / "histogram.tsv", h);
    m.add_output("histogram", "histogram.tsv");
    m.add_metric("histogram.pre_ip.count", std::to_string(h.pre_ip.count));
    m.add_metric("histogram.pre_ip.mean", h.pre_ip.mean);
    m.add_metric("histogram.fluent.count", std::to_string(h.fluent.count));
    m.add_metric("histogram.fluent.mean", h.fluent.mean);
    std::cout << std::setprecision(4) << "cue " << cue_name(cue) << ": pre-IP mean z=" << h.pre_ip.mean
              << " (n=" << h.pre_ip.count << "), fluent mean z=" << h.fluent.mean << " (n=" << h.fluent.count
              << ")\n";
  }
  m.save(out / "manifest.txt", cfg);
  return 0;
}

void bind_tagger_flags(Command& c) {
  c.bind("--features", "fusion.features", "comma list of text, raw, innovations");
  c.bind("--mode", "fusion.mode", "single, early or late");
  c.bind("--alpha", "fusion.alpha", "late-fusion weight of the prosody branch");
  c.bind("--training", "fusion.training", "joint or disjoint");
  c.bind("--lambda", "fusion.lambda", "weight of the prosody loss in joint training");
  c.bind("--prosody-model", "paths.prosody_model", "trained prosody model");
  c.bind("--innovations", "paths.innovations", "precomputed innovations (disjoint training only)");
  c.bind("--epochs", "tagger.epochs", "maximum epochs");
  c.bind("--hidden", "tagger.hidden", "text BiLSTM width");
  c.bind("--lr", "tagger.lr", "Adam learning rate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disfluency detection with predicted prosodic cues"};
  app.require_subcommand(1);

  std::vector<std::pair<Command*, std::function<int(const RunConfig&)>>> commands;
  std::list<Command> storage;
  auto add = [&](const std::string& name, const std::string& help, std::function<int(const RunConfig&)> fn) -> Command& {
    Command& c = storage.emplace_back(app, name, help);
    commands.emplace_back(&c, std::move(fn));
    return c;
  };

  Command& synth = add("synth", "generate a synthetic corpus", run_synth);
  synth.bind("--train", "synth.train", "training utterances");
  synth.bind("--dev", "synth.dev", "development utterances");
  synth.bind("--test", "synth.test", "test utterances");
  synth.bind("--delta", "synth.delta", "prosodic displacement of pre-interruption tokens, in noise units");
  synth.bind_flag("--write-frames", "synth.write_frames", "also write frame-level feature files");

  Command& features = add("features", "compute per-word cues from frames or audio", run_features);
  features.bind("--alignments", "paths.alignments", "word alignment file");
  features.bind("--frames", "paths.frames", "directory of <utt_id>.tsv frame features");
  features.bind("--audio", "paths.audio", "directory of <utt_id>.wav files");

  Command& tp = add("train-prosody", "train the prosodic cue predictor", run_train_prosody);
  tp.bind("--epochs", "prosody.epochs", "maximum epochs");
  tp.bind("--word-hidden", "prosody.word_hidden", "word BiLSTM width");
  tp.bind("--phone-hidden", "prosody.phone_hidden", "phone LSTM width");
  tp.bind("--lr", "prosody.lr", "Adam learning rate");

  Command& inn = add("innovate", "write innovation features for every transcript split", run_innovate);
  inn.bind("--prosody-model", "paths.prosody_model", "trained prosody model");

  Command& tt = add("train-tagger", "train the disfluency tagger over one or more seeds", run_train_tagger);
  bind_tagger_flags(tt);
  tt.bind("--seeds", "run.seeds", "seed count (from --seed) or comma list");

  Command& ta = add("tune-alpha", "grid-search the late-fusion weight on dev", run_tune_alpha);
  bind_tagger_flags(ta);
  ta.bind("--grid", "alpha.grid", "comma list of alpha values");

  Command& ev = add("eval", "score a prediction file, or decode a split with a trained tagger", run_eval);
  ev.bind("--predictions", "paths.predictions", "prediction file");
  ev.bind("--model", "paths.tagger_model", "trained tagger model");
  ev.bind("--split", "run.split", "split to decode with --model");

  Command& an = add("analyze", "recall breakdowns, innovation histograms and model diffs", run_analyze);
  an.bind("--predictions", "paths.predictions", "prediction file for the split");
  an.bind("--compare", "paths.compare", "second prediction file for a sentence-level diff");
  an.bind("--innovations", "paths.innovations", "innovation table for the histogram");
  an.bind("--cue", "analysis.cue", "cue index for the histogram");
  an.bind("--split", "run.split", "gold split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto& [cmd, fn] : commands) {
    if (!cmd->app()->parsed()) continue;
    try {
      return fn(cmd->resolve());
    } catch (const std::exception& e) {
      std::cerr << "disfl " << cmd->app()->get_name() << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
