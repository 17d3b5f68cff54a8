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

#include <atomic>
#include <cassert>
#include <stdexcept>

#include "disfl/kernels.hpp"

namespace disfl::kernels {

bool avx2_compiled();

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() { return (avx2_compiled() && cpu_has_avx2()) ? Isa::kAvx2 : Isa::kScalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

Isa best_available_isa() {
  static const Isa best = detect();
  return best;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (isa == Isa::kAvx2 && best_available_isa() != Isa::kAvx2) {
    throw std::invalid_argument("AVX2 kernels are not available on this machine");
  }
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& active_table() {
  return active_isa() == Isa::kAvx2 ? avx2_table() : scalar_table();
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active_table().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  assert(w.size() == rows * cols && x.size() == cols && y.size() == rows);
  active_table().gemv(w.data(), rows, cols, x.data(), y.data());
}

void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols, std::span<const double> g,
            std::span<double> x) {
  assert(w.size() == rows * cols && g.size() == rows && x.size() == cols);
  active_table().gemv_t(w.data(), rows, cols, g.data(), x.data());
}

void ger(std::span<double> w, std::size_t rows, std::size_t cols, std::span<const double> g,
         std::span<const double> x) {
  assert(w.size() == rows * cols && g.size() == rows && x.size() == cols);
  active_table().ger(w.data(), rows, cols, g.data(), x.data());
}

}  // namespace disfl::kernels
