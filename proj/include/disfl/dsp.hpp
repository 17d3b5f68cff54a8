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

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "disfl/nn/matrix.hpp"

namespace disfl::dsp {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1] for PCM input
  int sample_rate = 16000;
};

// 16-bit PCM mono WAV at `expected_rate`; anything else is an IoError.
Waveform read_wav(const std::filesystem::path& path, int expected_rate = 16000);
void write_wav(const std::filesystem::path& path, const Waveform& w);

struct DspConfig {
  double frame_len = 0.025;  // seconds
  double hop = 0.010;        // seconds
  std::size_t mel_bands = 40;
  std::size_t cepstra = 13;
  double preemphasis = 0.97;  // MFCC path only
  double f0_min = 60.0;
  double f0_max = 400.0;
  double voicing_threshold = 0.3;
  double epsilon = 1e-10;  // energy floor
  double default_f0 = 100.0;  // used when no frame is voiced
};

// Column layout of a frame-feature row.
enum FrameColumn : std::size_t {
  kNccf = 0,
  kPovLogPitch,
  kDeltaLogPitch,
  kLogEnergyTotal,
  kLogEnergyLow20,
  kLogEnergyHigh20,
  kMfcc0,
};
inline constexpr std::size_t kFrameColumns = 19;
const std::array<std::string_view, kFrameColumns>& frame_column_names();

struct FrameFeatures {
  double frame_len = 0.025;
  double hop = 0.010;
  nn::Matrix values;       // frames x 19
  std::vector<double> f0;  // per-frame pitch estimate (empty for ingested files)

  std::size_t frames() const { return values.rows(); }
  double center(std::size_t t) const { return static_cast<double>(t) * hop + frame_len / 2; }
};

// floor((n − len·rate)/(hop·rate)) + 1; throws Error when n is shorter than one frame.
std::size_t frame_count(std::size_t samples, int sample_rate, const DspConfig& cfg = {});

FrameFeatures compute_frame_features(const Waveform& w, const DspConfig& cfg = {});

// Mean of the frames whose centre lies in [start, end); the single nearest
// frame when none does.
std::array<double, kFrameColumns> word_average(const FrameFeatures& f, double start, double end);

// TSV with a mandatory header naming the 19 columns.
FrameFeatures parse_frame_features(std::istream& in, const std::string& source);
FrameFeatures read_frame_features(const std::filesystem::path& path);
void write_frame_features(const std::filesystem::path& path, const FrameFeatures& f);

// ---- building blocks ---------------------------------------------------

std::vector<double> hamming(std::size_t n);
// bands x (n_fft/2 + 1) triangular filters on the HTK mel scale over [0, rate/2].
nn::Matrix mel_filterbank(std::size_t bands, std::size_t n_fft, int sample_rate);
// n x n orthonormal DCT-II.
nn::Matrix dct_matrix(std::size_t n);
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Normalized cross-correlation of x[0..n) against x[lag..lag+n); 0 when
// either segment has zero energy.
double nccf(std::span<const double> x, std::size_t n, std::size_t lag);

// Power spectrum |X_k|^2, k = 0..n_fft/2, of a zero-padded frame.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t n_fft);
  ~PowerSpectrum();
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  std::vector<double> operator()(std::span<const double> frame);
  std::size_t size() const { return n_fft_; }

 private:
  std::size_t n_fft_;
  double* in_;
  void* out_;
  void* plan_;
};

}  // namespace disfl::dsp
