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

#include "disfl/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "disfl/corpus_io.hpp"
#include "disfl/error.hpp"
#include "disfl/kernels.hpp"
#include "disfl/nn/archive.hpp"

namespace disfl::dsp {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}
void put16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, int expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE") {
    throw IoError(name + ": not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  Waveform w;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4));
    const std::size_t size = le32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw IoError(name + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw IoError(name + ": short fmt chunk");
      const auto format = le16(&bytes[body]);
      const auto channels = le16(&bytes[body + 2]);
      const auto rate = le32(&bytes[body + 4]);
      const auto bits = le16(&bytes[body + 14]);
      if (format != 1) throw IoError(name + ": only PCM audio is supported");
      if (channels != 1) throw IoError(name + ": expected mono audio, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw IoError(name + ": expected 16-bit samples, got " + std::to_string(bits));
      if (static_cast<int>(rate) != expected_rate) {
        throw IoError(name + ": sample rate " + std::to_string(rate) + " Hz, expected " +
                      std::to_string(expected_rate) + " (resampling is not supported)");
      }
      w.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IoError(name + ": data chunk before fmt chunk");
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(le16(&bytes[body + 2 * i]));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw IoError(name + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  for (double s : w.samples) {
    const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0))));
  }
}

const std::array<std::string_view, kFrameColumns>& frame_column_names() {
  static const std::array<std::string_view, kFrameColumns> kNames = {
      "nccf",  "pov_log_pitch", "delta_log_pitch", "log_energy_total", "log_energy_low20",
      "log_energy_high20", "mfcc0", "mfcc1", "mfcc2", "mfcc3", "mfcc4", "mfcc5", "mfcc6",
      "mfcc7", "mfcc8", "mfcc9", "mfcc10", "mfcc11", "mfcc12"};
  return kNames;
}

std::size_t frame_count(std::size_t samples, int sample_rate, const DspConfig& cfg) {
  const auto len = static_cast<std::size_t>(std::lround(cfg.frame_len * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(cfg.hop * sample_rate));
  if (samples < len) {
    throw Error("audio too short: " + std::to_string(samples) + " samples, one frame needs " +
                std::to_string(len));
  }
  return (samples - len) / hop + 1;
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

nn::Matrix mel_filterbank(std::size_t bands, std::size_t n_fft, int sample_rate) {
  const std::size_t bins = n_fft / 2 + 1;
  nn::Matrix fb(bands, bins);
  const double nyquist = sample_rate / 2.0;
  const double top = hz_to_mel(nyquist);
  std::vector<double> edge(bands + 2);
  for (std::size_t i = 0; i < edge.size(); ++i) {
    edge[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = edge[b], mid = edge[b + 1], hi = edge[b + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double v = 0.0;
      if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) v = (hi - f) / (hi - mid);
      fb(b, k) = v;
    }
  }
  return fb;
}

nn::Matrix dct_matrix(std::size_t n) {
  nn::Matrix c(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      c(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(n));
    }
  }
  return c;
}

double nccf(std::span<const double> x, std::size_t n, std::size_t lag) {
  if (lag + n > x.size()) throw ShapeError("nccf: segment exceeds signal");
  const auto a = x.subspan(0, n);
  const auto b = x.subspan(lag, n);
  const double ab = kernels::dot(a, b);
  const double aa = kernels::dot(a, a);
  const double bb = kernels::dot(b, b);
  const double den = std::sqrt(aa * bb);
  if (!(den > 0)) return 0.0;
  return std::clamp(ab / den, -1.0, 1.0);
}

PowerSpectrum::PowerSpectrum(std::size_t n_fft) : n_fft_(n_fft) {
  std::lock_guard lock(planner_mutex());
  in_ = fftw_alloc_real(n_fft);
  out_ = fftw_alloc_complex(n_fft / 2 + 1);
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in_, static_cast<fftw_complex*>(out_), FFTW_ESTIMATE);
}

PowerSpectrum::~PowerSpectrum() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_);
  fftw_free(out_);
}

std::vector<double> PowerSpectrum::operator()(std::span<const double> frame) {
  if (frame.size() > n_fft_) throw ShapeError("frame longer than FFT size");
  std::fill(in_, in_ + n_fft_, 0.0);
  std::copy(frame.begin(), frame.end(), in_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* out = static_cast<const fftw_complex*>(out_);
  std::vector<double> p(n_fft_ / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  return p;
}

FrameFeatures compute_frame_features(const Waveform& w, const DspConfig& cfg) {
  if (w.sample_rate <= 0) throw Error("sample rate must be positive");
  if (cfg.mel_bands % 2 != 0 || cfg.mel_bands < 2) throw ConfigError("mel band count must be even");
  if (cfg.cepstra > cfg.mel_bands) throw ConfigError("more cepstra than mel bands");
  const std::size_t frames = frame_count(w.samples.size(), w.sample_rate, cfg);
  const auto len = static_cast<std::size_t>(std::lround(cfg.frame_len * w.sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(cfg.hop * w.sample_rate));
  std::size_t n_fft = 1;
  while (n_fft < len) n_fft <<= 1;

  const auto window = hamming(len);
  const nn::Matrix fb = mel_filterbank(cfg.mel_bands, n_fft, w.sample_rate);
  const nn::Matrix dct = dct_matrix(cfg.mel_bands);
  PowerSpectrum spectrum(n_fft);
  const std::size_t half = cfg.mel_bands / 2;

  const auto min_lag = static_cast<std::size_t>(std::floor(w.sample_rate / cfg.f0_max));
  const auto max_lag = static_cast<std::size_t>(std::ceil(w.sample_rate / cfg.f0_min));
  // Correlation reads up to max_lag samples past the frame; pad with zeros.
  std::vector<double> padded(w.samples);
  padded.resize(w.samples.size() + max_lag + len, 0.0);

  FrameFeatures out;
  out.frame_len = cfg.frame_len;
  out.hop = cfg.hop;
  out.values = nn::Matrix(frames, kFrameColumns);
  std::vector<double> raw_f0(frames, 0.0), nccf_best(frames, 0.0);
  std::vector<bool> voiced(frames, false);
  const double log_eps = std::log(cfg.epsilon);

  std::vector<double> seg(len), pre(len), mel(cfg.mel_bands), logmel(cfg.mel_bands);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t s0 = t * hop;
    for (std::size_t i = 0; i < len; ++i) seg[i] = w.samples[s0 + i] * window[i];
    const double energy = kernels::dot(std::span<const double>(seg), std::span<const double>(seg));
    out.values(t, kLogEnergyTotal) = energy > cfg.epsilon ? std::log(energy) : log_eps;

    const auto power = spectrum(seg);
    for (std::size_t b = 0; b < cfg.mel_bands; ++b) mel[b] = kernels::dot(fb.row(b), std::span<const double>(power));
    double low = 0, high = 0;
    for (std::size_t b = 0; b < cfg.mel_bands; ++b) (b < half ? low : high) += mel[b];
    out.values(t, kLogEnergyLow20) = low > cfg.epsilon ? std::log(low) : log_eps;
    out.values(t, kLogEnergyHigh20) = high > cfg.epsilon ? std::log(high) : log_eps;

    for (std::size_t i = 0; i < len; ++i) {
      const double prev = s0 + i > 0 ? w.samples[s0 + i - 1] : w.samples[s0];
      pre[i] = (w.samples[s0 + i] - cfg.preemphasis * prev) * window[i];
    }
    const auto ppower = spectrum(pre);
    for (std::size_t b = 0; b < cfg.mel_bands; ++b) {
      const double e = kernels::dot(fb.row(b), std::span<const double>(ppower));
      logmel[b] = e > cfg.epsilon ? std::log(e) : log_eps;
    }
    for (std::size_t c = 0; c < cfg.cepstra; ++c) {
      out.values(t, kMfcc0 + c) = kernels::dot(dct.row(c), std::span<const double>(logmel));
    }

    // Pitch: NCCF peak over the lag range, preferring the shortest lag that
    // comes within 5% of the peak to avoid octave-down errors.
    const std::span<const double> x(padded.data() + s0, len + max_lag);
    std::vector<double> r(max_lag + 2, -1.0);
    double best = -1.0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
      r[lag] = nccf(x, len, lag);
      best = std::max(best, r[lag]);
    }
    std::size_t chosen = min_lag;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
      const bool peak = (lag == min_lag || r[lag] >= r[lag - 1]) && (lag == max_lag || r[lag] >= r[lag + 1]);
      if (peak && r[lag] >= 0.95 * best && best > 0) {
        chosen = lag;
        break;
      }
      if (r[lag] == best) chosen = lag;
    }
    double refined = static_cast<double>(chosen);
    if (chosen > min_lag && chosen < max_lag) {
      const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
      const double den = a - 2 * b + c;
      if (den < 0) refined += 0.5 * (a - c) / den;
    }
    nccf_best[t] = std::max(-1.0, std::min(1.0, best));
    raw_f0[t] = w.sample_rate / refined;
    voiced[t] = best >= cfg.voicing_threshold;
  }

  // Unvoiced frames carry the last voiced f0; leading frames take the first.
  std::vector<double> f0(frames, cfg.default_f0);
  const auto first = std::find(voiced.begin(), voiced.end(), true);
  if (first != voiced.end()) {
    double last = raw_f0[static_cast<std::size_t>(first - voiced.begin())];
    for (std::size_t t = 0; t < frames; ++t) {
      if (voiced[t]) last = raw_f0[t];
      f0[t] = last;
    }
  }
  for (std::size_t t = 0; t < frames; ++t) {
    const double pov = std::pow(std::max(0.0, nccf_best[t]), 2);
    out.values(t, kNccf) = nccf_best[t];
    out.values(t, kPovLogPitch) = pov * std::log(f0[t]);
    const std::size_t prev = t > 0 ? t - 1 : 0;
    const std::size_t next = t + 1 < frames ? t + 1 : frames - 1;
    const double span = static_cast<double>(next - prev);
    out.values(t, kDeltaLogPitch) = span > 0 ? (std::log(f0[next]) - std::log(f0[prev])) / span : 0.0;
  }
  out.f0 = std::move(f0);
  return out;
}

std::array<double, kFrameColumns> word_average(const FrameFeatures& f, double start, double end) {
  if (f.frames() == 0) throw Error("word_average: no frames");
  std::array<double, kFrameColumns> sum{};
  std::size_t count = 0;
  for (std::size_t t = 0; t < f.frames(); ++t) {
    const double c = f.center(t);
    if (c >= start && c < end) {
      for (std::size_t k = 0; k < kFrameColumns; ++k) sum[k] += f.values(t, k);
      ++count;
    }
  }
  if (count == 0) {
    const double mid = 0.5 * (start + end);
    std::size_t nearest = 0;
    for (std::size_t t = 1; t < f.frames(); ++t) {
      if (std::abs(f.center(t) - mid) < std::abs(f.center(nearest) - mid)) nearest = t;
    }
    for (std::size_t k = 0; k < kFrameColumns; ++k) sum[k] = f.values(nearest, k);
    return sum;
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

FrameFeatures parse_frame_features(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  const auto& names = frame_column_names();
  if (!std::getline(in, line)) throw FormatError(source, 1, "missing header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() != kFrameColumns) throw FormatError(source, lineno, "header must name 19 columns");
  for (std::size_t k = 0; k < kFrameColumns; ++k) {
    if (header[k] != names[k]) {
      throw FormatError(source, lineno, "column " + std::to_string(k) + " must be '" + std::string(names[k]) + "'");
    }
  }
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != kFrameColumns) throw FormatError(source, lineno, "expected 19 values");
    for (const auto& v : f) {
      try {
        data.push_back(nn::parse_double(v));
      } catch (const Error&) {
        throw FormatError(source, lineno, "not a number: '" + v + "'");
      }
    }
    ++rows;
  }
  if (rows == 0) throw FormatError(source, lineno, "no frames");
  FrameFeatures ff;
  ff.values = nn::Matrix(rows, kFrameColumns, std::move(data));
  return ff;
}

FrameFeatures read_frame_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open frame features " + path.string());
  return parse_frame_features(in, path.string());
}

void write_frame_features(const std::filesystem::path& path, const FrameFeatures& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const auto& names = frame_column_names();
  for (std::size_t k = 0; k < kFrameColumns; ++k) out << (k ? "\t" : "") << names[k];
  out << '\n';
  for (std::size_t t = 0; t < f.frames(); ++t) {
    for (std::size_t k = 0; k < kFrameColumns; ++k) out << (k ? "\t" : "") << format_fixed6(f.values(t, k));
    out << '\n';
  }
}

}  // namespace disfl::dsp
