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

#include <cmath>
#include <memory>

#include "disfl/error.hpp"
#include "disfl/kernels.hpp"
#include "disfl/nn/tape.hpp"

namespace disfl::nn {

LstmParams add_lstm(ParameterStore& store, const std::string& prefix, std::size_t input,
                    std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.input = input;
  p.hidden = hidden;
  p.w = &store.add(prefix + ".w", 4 * hidden, input);
  p.u = &store.add(prefix + ".u", 4 * hidden, hidden);
  p.b = &store.add(prefix + ".b", 1, 4 * hidden);
  init_uniform_fan_in(*p.w, rng);
  init_uniform_fan_in(*p.u, rng);
  for (std::size_t k = hidden; k < 2 * hidden; ++k) p.b->value(0, k) = 1.0;
  return p;
}

BiLstmParams add_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input,
                        std::size_t hidden, Rng& rng) {
  BiLstmParams p;
  p.fwd = add_lstm(store, prefix + ".fwd", input, hidden, rng);
  p.bwd = add_lstm(store, prefix + ".bwd", input, hidden, rng);
  return p;
}

LstmParams find_lstm(ParameterStore& store, const std::string& prefix) {
  LstmParams p;
  p.w = &store.get(prefix + ".w");
  p.u = &store.get(prefix + ".u");
  p.b = &store.get(prefix + ".b");
  p.hidden = p.u->value.cols();
  p.input = p.w->value.cols();
  return p;
}

BiLstmParams find_bilstm(ParameterStore& store, const std::string& prefix) {
  return {find_lstm(store, prefix + ".fwd"), find_lstm(store, prefix + ".bwd")};
}

namespace {

// Per-step activations kept for backpropagation through time.
struct LstmCache {
  Matrix gates;   // T x 4H, post-activation i, f, g, o
  Matrix cell;    // T x H
  Matrix tanh_c;  // T x H
};

}  // namespace

Var lstm(Tape& t, Var x, const LstmParams& p, bool reverse) {
  const Matrix& xv = t.value(x);
  const std::size_t T = xv.rows();
  const std::size_t H = p.hidden;
  const std::size_t D = p.input;
  if (xv.cols() != D) {
    throw ShapeError("lstm: input has " + std::to_string(xv.cols()) + " columns, '" + p.w->name +
                     "' expects " + std::to_string(D));
  }
  auto cache = std::make_shared<LstmCache>();
  cache->gates = Matrix(T, 4 * H);
  cache->cell = Matrix(T, H);
  cache->tanh_c = Matrix(T, H);
  Matrix out(T, H);
  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t r = reverse ? T - 1 - step : step;
    auto a = cache->gates.row(r);
    std::copy(p.b->value.data().begin(), p.b->value.data().end(), a.begin());
    kernels::gemv(p.w->value.flat(), 4 * H, D, xv.row(r), a);
    kernels::gemv(p.u->value.flat(), 4 * H, H, h_prev, a);
    auto c = cache->cell.row(r);
    auto tc = cache->tanh_c.row(r);
    auto h = out.row(r);
    for (std::size_t k = 0; k < H; ++k) {
      const double ig = sigmoid(a[k]);
      const double fg = sigmoid(a[H + k]);
      const double gg = std::tanh(a[2 * H + k]);
      const double og = sigmoid(a[3 * H + k]);
      a[k] = ig;
      a[H + k] = fg;
      a[2 * H + k] = gg;
      a[3 * H + k] = og;
      c[k] = fg * c_prev[k] + ig * gg;
      tc[k] = std::tanh(c[k]);
      h[k] = og * tc[k];
    }
    std::copy(h.begin(), h.end(), h_prev.begin());
    std::copy(c.begin(), c.end(), c_prev.begin());
  }
  const bool rg = t.requires_grad(x) || !p.w->frozen || !p.u->frozen || !p.b->frozen;
  return t.push(std::move(out), rg, [x, p, reverse, cache](Tape& tp, std::size_t self) {
    const Matrix& dout = tp.node(self).grad;
    const Matrix& hout = tp.node(self).value;
    const Matrix& xin = tp.value(x);
    const std::size_t T2 = dout.rows();
    const std::size_t H2 = p.hidden;
    const std::size_t D2 = p.input;
    const bool dx_needed = tp.requires_grad(x);
    std::vector<double> dh_next(H2, 0.0), dc_next(H2, 0.0), da(4 * H2), dh(H2);
    const std::vector<double> zeros(H2, 0.0);
    for (std::size_t step = T2; step-- > 0;) {
      const std::size_t r = reverse ? T2 - 1 - step : step;
      const bool first = (step == 0);
      const std::size_t prev = reverse ? r + 1 : r - 1;
      auto gates = cache->gates.row(r);
      auto tc = cache->tanh_c.row(r);
      std::span<const double> c_prev = first ? std::span<const double>(zeros) : cache->cell.row(prev);
      std::span<const double> h_prev = first ? std::span<const double>(zeros) : hout.row(prev);
      auto g_out = dout.row(r);
      for (std::size_t k = 0; k < H2; ++k) dh[k] = g_out[k] + dh_next[k];
      for (std::size_t k = 0; k < H2; ++k) {
        const double ig = gates[k], fg = gates[H2 + k], gg = gates[2 * H2 + k], og = gates[3 * H2 + k];
        const double d_o = dh[k] * tc[k];
        const double dc = dh[k] * og * (1.0 - tc[k] * tc[k]) + dc_next[k];
        da[k] = dc * gg * ig * (1.0 - ig);
        da[H2 + k] = dc * c_prev[k] * fg * (1.0 - fg);
        da[2 * H2 + k] = dc * ig * (1.0 - gg * gg);
        da[3 * H2 + k] = d_o * og * (1.0 - og);
        dc_next[k] = dc * fg;
      }
      if (!p.w->frozen) kernels::ger(p.w->grad.flat(), 4 * H2, D2, da, xin.row(r));
      if (!p.u->frozen && !first) kernels::ger(p.u->grad.flat(), 4 * H2, H2, da, h_prev);
      if (!p.b->frozen) kernels::axpy(1.0, da, p.b->grad.flat());
      if (dx_needed) kernels::gemv_t(p.w->value.flat(), 4 * H2, D2, da, tp.grad(x).row(r));
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      kernels::gemv_t(p.u->value.flat(), 4 * H2, H2, da, dh_next);
    }
  });
}

Var bilstm(Tape& t, Var x, const BiLstmParams& p) {
  const Var f = lstm(t, x, p.fwd, false);
  const Var b = lstm(t, x, p.bwd, true);
  const Var parts[] = {f, b};
  return concat_cols(t, parts);
}

}  // namespace disfl::nn
