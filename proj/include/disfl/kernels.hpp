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

// Dense double-precision kernels used by the recurrent encoders, the CRF and
// the DSP front end. Every kernel has a scalar reference implementation and an
// AVX2+FMA variant; the variant is chosen once at startup from CPUID and can
// be overridden (tests pin both and compare).

#include <cstddef>
#include <span>
#include <string_view>

namespace disfl::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Best instruction set supported by this CPU and compiled into the binary.
Isa best_available_isa();

// Currently dispatched instruction set.
Isa active_isa();

// Throws std::invalid_argument if `isa` is not available on this machine.
void set_isa(Isa isa);

// Restores `previous` on destruction.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }
  ~ScopedIsa() { set_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

// Raw kernel signatures. All matrices are row-major.
struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += W x, W is rows x cols
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
  // x += W^T g, W is rows x cols
  void (*gemv_t)(const double* w, std::size_t rows, std::size_t cols, const double* g, double* x);
  // W += g x^T, W is rows x cols
  void (*ger)(double* w, std::size_t rows, std::size_t cols, const double* g, const double* x);
};

const KernelTable& scalar_table();
const KernelTable& avx2_table();  // only callable when best_available_isa() == kAvx2
const KernelTable& active_table();

// Span front ends over the active table. Sizes are checked with assertions
// only; callers in this library validate shapes before reaching here.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols, std::span<const double> g,
            std::span<double> x);
void ger(std::span<double> w, std::size_t rows, std::size_t cols, std::span<const double> g,
         std::span<const double> x);

}  // namespace disfl::kernels
