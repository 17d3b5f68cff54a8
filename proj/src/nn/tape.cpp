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

#include "disfl/nn/tape.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "disfl/error.hpp"
#include "disfl/kernels.hpp"

namespace disfl::nn {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool param_trainable(const Parameter* p) { return p != nullptr && !p->frozen; }

}  // namespace

void check_shape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible operands " + shape_str(a) + " and " +
                     shape_str(b));
  }
}

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1x1");
  for (auto& n : nodes_) {
    if (n.requires_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

double softplus(double x) {
  if (x > 20.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kSoftplus: return softplus(x);
  }
  return x;
}

double activation_grad(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kTanh: {
      const double y = std::tanh(x);
      return 1.0 - y * y;
    }
    case Activation::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::kSoftplus: return sigmoid(x);
  }
  return 1.0;
}

double gaussian_nll(double x, double mu, double var) {
  if (!(var > 0.0)) throw std::domain_error("gaussian_nll: variance must be positive");
  const double d = x - mu;
  return 0.5 * std::log(2.0 * std::numbers::pi * var) + d * d / (2.0 * var);
}

Var constant(Tape& t, Matrix value) { return t.push(std::move(value), false, nullptr); }

Var embed(Tape& t, Parameter& table, std::span<const int> ids) {
  const std::size_t dim = table.value.cols();
  Matrix out(ids.size(), dim);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= table.value.rows()) {
      throw ShapeError("embed: id " + std::to_string(ids[r]) + " out of range for '" +
                       table.name + "' (" + shape_str(table.value) + ")");
    }
    auto src = table.value.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  std::vector<int> id_copy(ids.begin(), ids.end());
  return t.push(std::move(out), param_trainable(&table),
                [&table, id_copy = std::move(id_copy)](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.node(self).grad;
                  for (std::size_t r = 0; r < id_copy.size(); ++r) {
                    kernels::axpy(1.0, g.row(r), table.grad.row(static_cast<std::size_t>(id_copy[r])));
                  }
                });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  bool rg = false;
  for (Var p : parts) {
    check_shape(t.value(p).rows() == rows, "concat_cols", t.value(parts[0]), t.value(p));
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  std::vector<std::size_t> offsets;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      auto src = v.row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    }
    offsets.push_back(off);
    off += v.cols();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return t.push(std::move(out), rg, [ids, offsets](Tape& tp, std::size_t self) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Matrix& dst = tp.grad(ids[k]);
      const Matrix& g = tp.node(self).grad;
      for (std::size_t r = 0; r < dst.rows(); ++r) {
        auto src = g.row(r).subspan(offsets[k], dst.cols());
        kernels::axpy(1.0, src, dst.row(r));
      }
    }
  });
}

Var gather_rows(Tape& t, Var x, std::span<const std::size_t> rows) {
  const Matrix& xv = t.value(x);
  Matrix out(rows.size(), xv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= xv.rows()) throw ShapeError("gather_rows: row index out of range");
    auto src = xv.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.push(std::move(out), t.requires_grad(x), [x, idx](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    Matrix& dx = tp.grad(x);
    for (std::size_t r = 0; r < idx.size(); ++r) kernels::axpy(1.0, g.row(r), dx.row(idx[r]));
  });
}

Var linear(Tape& t, Var x, Parameter& w, Parameter* b) {
  const Matrix& xv = t.value(x);
  const std::size_t out_dim = w.value.rows();
  const std::size_t in_dim = w.value.cols();
  if (xv.cols() != in_dim) {
    throw ShapeError("linear: input " + shape_str(xv) + " does not match weight '" + w.name +
                     "' " + shape_str(w.value));
  }
  if (b != nullptr && b->value.size() != out_dim) {
    throw ShapeError("linear: bias '" + b->name + "' " + shape_str(b->value) +
                     " does not match weight '" + w.name + "' " + shape_str(w.value));
  }
  Matrix out(xv.rows(), out_dim);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto y = out.row(r);
    if (b != nullptr) std::copy(b->value.data().begin(), b->value.data().end(), y.begin());
    kernels::gemv(w.value.flat(), out_dim, in_dim, xv.row(r), y);
  }
  const bool rg = t.requires_grad(x) || param_trainable(&w) || param_trainable(b);
  return t.push(std::move(out), rg, [x, &w, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv2 = tp.value(x);
    const std::size_t od = w.value.rows(), id = w.value.cols();
    const bool dx_needed = tp.requires_grad(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (!w.frozen) kernels::ger(w.grad.flat(), od, id, g.row(r), xv2.row(r));
      if (b != nullptr && !b->frozen) kernels::axpy(1.0, g.row(r), b->grad.flat());
      if (dx_needed) kernels::gemv_t(w.value.flat(), od, id, g.row(r), tp.grad(x).row(r));
    }
  });
}

Var activate(Tape& t, Var x, Activation a) {
  const Matrix& xv = t.value(x);
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out.data()[i] = activate(a, xv.data()[i]);
  return t.push(std::move(out), t.requires_grad(x), [x, a](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv2 = tp.value(x);
    Matrix& dx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      dx.data()[i] += g.data()[i] * activation_grad(a, xv2.data()[i]);
    }
  });
}

Var activate_columns(Tape& t, Var x, std::span<const Activation> per_column) {
  const Matrix& xv = t.value(x);
  if (per_column.size() != xv.cols()) {
    throw ShapeError("activate_columns: " + std::to_string(per_column.size()) +
                     " activations for " + shape_str(xv));
  }
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = activate(per_column[c], xv(r, c));
  }
  std::vector<Activation> acts(per_column.begin(), per_column.end());
  return t.push(std::move(out), t.requires_grad(x), [x, acts](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv2 = tp.value(x);
    Matrix& dx = tp.grad(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        dx(r, c) += g(r, c) * activation_grad(acts[c], xv2(r, c));
      }
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  check_shape(av.same_shape(bv), "add", av, bv);
  Matrix out = av;
  kernels::axpy(1.0, bv.flat(), out.flat());
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (tp.requires_grad(a)) kernels::axpy(1.0, g.flat(), tp.grad(a).flat());
    if (tp.requires_grad(b)) kernels::axpy(1.0, g.flat(), tp.grad(b).flat());
  });
}

Var scale(Tape& t, Var x, double factor) {
  Matrix out = t.value(x);
  for (double& v : out.data()) v *= factor;
  return t.push(std::move(out), t.requires_grad(x), [x, factor](Tape& tp, std::size_t self) {
    kernels::axpy(factor, tp.node(self).grad.flat(), tp.grad(x).flat());
  });
}

Var mix(Tape& t, Var a, Var b, double alpha) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  check_shape(av.same_shape(bv), "mix", av, bv);
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = alpha * av.data()[i] + (1.0 - alpha) * bv.data()[i];
  }
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b, alpha](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (tp.requires_grad(a)) kernels::axpy(alpha, g.flat(), tp.grad(a).flat());
    if (tp.requires_grad(b)) kernels::axpy(1.0 - alpha, g.flat(), tp.grad(b).flat());
  });
}

Var dropout(Tape& t, Var x, double p) {
  if (!t.training() || p <= 0.0) return x;
  if (t.rng() == nullptr) throw std::logic_error("dropout: training tape without rng");
  const Matrix& xv = t.value(x);
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(xv.size());
  const double inv = 1.0 / (1.0 - p);
  for (double& m : mask) m = keep(*t.rng()) ? inv : 0.0;
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = xv.data()[i] * mask[i];
  return t.push(std::move(out), t.requires_grad(x),
                [x, mask = std::move(mask)](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.node(self).grad;
                  Matrix& dx = tp.grad(x);
                  for (std::size_t i = 0; i < g.size(); ++i) dx.data()[i] += g.data()[i] * mask[i];
                });
}

Var gaussian_nll(Tape& t, Var mu, Var var, const Matrix& target, const std::vector<bool>& row_mask) {
  const Matrix& mv = t.value(mu);
  const Matrix& vv = t.value(var);
  check_shape(mv.same_shape(vv), "gaussian_nll", mv, vv);
  check_shape(mv.same_shape(target), "gaussian_nll", mv, target);
  if (!row_mask.empty() && row_mask.size() != mv.rows()) {
    throw ShapeError("gaussian_nll: row mask length mismatch");
  }
  std::vector<bool> mask(mv.rows(), true);
  for (std::size_t r = 0; r < row_mask.size(); ++r) mask[r] = row_mask[r];
  // Neumaier-compensated sum: the total is a few hundred O(1) terms, and
  // plain accumulation error would show up in finite-difference checks.
  double total = 0.0, carry = 0.0;
  for (std::size_t r = 0; r < mv.rows(); ++r) {
    if (!mask[r]) continue;
    for (std::size_t c = 0; c < mv.cols(); ++c) {
      const double term = gaussian_nll(target(r, c), mv(r, c), vv(r, c));
      const double next = total + term;
      carry += std::abs(total) >= std::abs(term) ? (total - next) + term : (term - next) + total;
      total = next;
    }
  }
  total += carry;
  const bool rg = t.requires_grad(mu) || t.requires_grad(var);
  return t.push(Matrix(1, 1, total), rg, [mu, var, target, mask](Tape& tp, std::size_t self) {
    const double g = tp.node(self).grad(0, 0);
    const Matrix& m = tp.value(mu);
    const Matrix& v = tp.value(var);
    const bool dmu = tp.requires_grad(mu), dvar = tp.requires_grad(var);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (!mask[r]) continue;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const double d = target(r, c) - m(r, c);
        const double s2 = v(r, c);
        if (dmu) tp.grad(mu)(r, c) += g * (-d / s2);
        if (dvar) tp.grad(var)(r, c) += g * (0.5 / s2 - d * d / (2.0 * s2 * s2));
      }
    }
  });
}

Var zscore(Tape& t, Var mu, Var var, const Matrix& target) {
  const Matrix& mv = t.value(mu);
  const Matrix& vv = t.value(var);
  check_shape(mv.same_shape(vv), "zscore", mv, vv);
  check_shape(mv.same_shape(target), "zscore", mv, target);
  Matrix out(mv.rows(), mv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = (target.data()[i] - mv.data()[i]) / std::sqrt(vv.data()[i]);
  }
  const bool rg = t.requires_grad(mu) || t.requires_grad(var);
  return t.push(std::move(out), rg, [mu, var, target](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& m = tp.value(mu);
    const Matrix& v = tp.value(var);
    const bool dmu = tp.requires_grad(mu), dvar = tp.requires_grad(var);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = std::sqrt(v.data()[i]);
      if (dmu) tp.grad(mu).data()[i] += -g.data()[i] / s;
      if (dvar) {
        const double d = target.data()[i] - m.data()[i];
        tp.grad(var).data()[i] += g.data()[i] * (-0.5 * d / (s * v.data()[i]));
      }
    }
  });
}

}  // namespace disfl::nn
