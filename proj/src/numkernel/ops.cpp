/*
 * Copyright 2026 The drfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "drfl/numkernel/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drfl/errors.hpp"
#include "drfl/numkernel/kernels.hpp"

namespace drfl::numkernel {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ContractError(msg);
}

void require_matrix(const Tensor& t, const char* op) {
  require(t.rank() == 2, std::string(op) + ": expected a matrix, got " +
                             shape_string(t.shape()));
}

// Elementwise unary op with derivative expressed through input x and output y.
template <class F, class D>
Var unary(Var x, F f, D dfdx) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi, dfdx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(xi);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_mut(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

void accumulate_if(Tape& t, std::size_t id, const Tensor& g, double sign = 1.0) {
  if (!t.requires_grad(id)) return;
  Tensor& gx = t.grad_mut(id);
  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += sign * g[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  require(bv.shape()[0] == k, "matmul: inner dimensions " + shape_string(av.shape()) +
                                  " * " + shape_string(bv.shape()));
  Tensor out({m, n});
  kernels::gemm_nn(m, k, n, av.values(), bv.values(), out.values());
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {a, b}, [ai, bi, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      kernels::gemm_nt(m, n, k, g.values(), t.value(bi).values(), t.grad_mut(ai).values(), true);
    }
    if (t.requires_grad(bi)) {
      kernels::gemm_tn(m, k, n, t.value(ai).values(), g.values(), t.grad_mut(bi).values(), true);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate_if(t, ai, g);
    accumulate_if(t, bi, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate_if(t, ai, g);
    accumulate_if(t, bi, g, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad_mut(ai);
      const Tensor& bv = t.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_mut(bi);
      const Tensor& av = t.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_matrix(xv, "add_bias");
  const std::size_t m = xv.shape()[0], n = xv.shape()[1];
  require(bv.size() == n, "add_bias: bias " + shape_string(bv.shape()) + " for input " +
                              shape_string(xv.shape()));
  Tensor out = xv;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
  const std::size_t xi = x.id, bi = bias.id;
  return x.tape->record(std::move(out), {x, bias}, [xi, bi, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate_if(t, xi, g);
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_mut(bi);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
    }
  });
}

Var scale(Var x, double s) {
  return unary(x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Var add_scalar(Var x, double s) {
  return unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Var one_minus(Var x) {
  return unary(x, [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Var sigmoid(Var x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var elu(Var x) {
  return unary(x, [](double v) { return v > 0 ? v : std::expm1(v); },
               [](double v, double y) { return v > 0 ? 1.0 : y + 1.0; });
}

Var abs(Var x) {
  return unary(x, [](double v) { return std::fabs(v); },
               [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Var square(Var x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  const std::size_t xi = x.id;
  return x.tape->record(Tensor::scalar(s), {x}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gx = t.grad_mut(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  require(n > 0, "mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var dense(Var x, Var weights, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weights.value();
  require(xv.rank() == 2 && wv.rank() == 2 && xv.shape()[1] == wv.shape()[0],
          "dense: input " + shape_string(xv.shape()) + " vs weights " +
              shape_string(wv.shape()));
  require(bias.value().size() == wv.shape()[1],
          "dense: bias " + shape_string(bias.value().shape()) + " vs weights " +
              shape_string(wv.shape()));
  return add_bias(matmul(x, weights), bias);
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  require_matrix(lv, "softmax_cross_entropy");
  const std::size_t b = lv.shape()[0], k = lv.shape()[1];
  require(labels.size() == b, "softmax_cross_entropy: " + std::to_string(labels.size()) +
                                  " labels for batch " + std::to_string(b));
  require(b > 0 && k > 0, "softmax_cross_entropy: empty logits");
  Tensor probs({b, k});
  double loss = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < k,
            "softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                std::to_string(k) + ")");
    const double* row = lv.data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < k; ++c) probs[r * k + c] = std::exp(row[c] - lse);
    loss += lse - row[y];
  }
  loss /= static_cast<double>(b);
  std::vector<int> ys(labels.begin(), labels.end());
  const std::size_t li = logits.id;
  return logits.tape->record(
      Tensor::scalar(loss), {logits},
      [li, b, k, probs = std::move(probs), ys = std::move(ys)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / static_cast<double>(b);
        Tensor& gl = t.grad_mut(li);
        for (std::size_t r = 0; r < b; ++r) {
          for (std::size_t c = 0; c < k; ++c) {
            const double onehot = static_cast<std::size_t>(ys[r]) == c ? 1.0 : 0.0;
            gl[r * k + c] += g * (probs[r * k + c] - onehot);
          }
        }
      });
}

Var gather_cols(Var x, std::span<const std::size_t> index) {
  const Tensor& xv = x.value();
  require_matrix(xv, "gather_cols");
  const std::size_t m = xv.shape()[0], n = xv.shape()[1];
  require(index.size() == m, "gather_cols: index length mismatch");
  Tensor out({m, 1});
  for (std::size_t r = 0; r < m; ++r) {
    require(index[r] < n, "gather_cols: column index out of range");
    out[r] = xv[r * n + index[r]];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {x},
                        [xi, n, idx = std::move(idx)](Tape& t, std::size_t self) {
                          const Tensor& g = t.grad(self);
                          Tensor& gx = t.grad_mut(xi);
                          for (std::size_t r = 0; r < idx.size(); ++r) gx[r * n + idx[r]] += g[r];
                        });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    accumulate_if(t, xi, t.grad(self));
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = parts.front().value().cols();
  std::size_t m = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_rows");
    require(p.value().cols() == n, "concat_rows: column count mismatch");
    m += p.value().rows();
  }
  Tensor out({m, n});
  std::size_t offset = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + offset);
    offset += p.value().size();
    ids.push_back(p.id);
  }
  return parts.front().tape->record(std::move(out), parts,
                                    [ids = std::move(ids)](Tape& t, std::size_t self) {
                                      const Tensor& g = t.grad(self);
                                      std::size_t off = 0;
                                      for (std::size_t id : ids) {
                                        const std::size_t len = t.value(id).size();
                                        if (t.requires_grad(id)) {
                                          Tensor& gp = t.grad_mut(id);
                                          for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
                                        }
                                        off += len;
                                      }
                                    });
}

Var row_matvec(Var x, Var w, std::size_t out_width) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require_matrix(xv, "row_matvec");
  require_matrix(wv, "row_matvec");
  const std::size_t b = xv.shape()[0], n = xv.shape()[1], e = out_width;
  require(wv.shape()[0] == b && wv.shape()[1] == n * e,
          "row_matvec: weights " + shape_string(wv.shape()) + " for input " +
              shape_string(xv.shape()) + " and width " + std::to_string(e));
  Tensor out({b, e});
  for (std::size_t r = 0; r < b; ++r) {
    const double* wr = wv.data() + r * n * e;
    double* orow = out.data() + r * e;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = xv[r * n + i];
      for (std::size_t j = 0; j < e; ++j) orow[j] += xi * wr[i * e + j];
    }
  }
  const std::size_t xid = x.id, wid = w.id;
  return x.tape->record(std::move(out), {x, w}, [xid, wid, b, n, e](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(xid);
    const Tensor& wv = t.value(wid);
    const bool gx_needed = t.requires_grad(xid);
    const bool gw_needed = t.requires_grad(wid);
    for (std::size_t r = 0; r < b; ++r) {
      const double* gr = g.data() + r * e;
      for (std::size_t i = 0; i < n; ++i) {
        if (gx_needed) {
          double s = 0.0;
          for (std::size_t j = 0; j < e; ++j) s += gr[j] * wv[r * n * e + i * e + j];
          t.grad_mut(xid)[r * n + i] += s;
        }
        if (gw_needed) {
          const double xi = xv[r * n + i];
          double* gw = t.grad_mut(wid).data() + r * n * e + i * e;
          for (std::size_t j = 0; j < e; ++j) gw[j] += xi * gr[j];
        }
      }
    }
  });
}

Var row_dot(Var a, Var c) {
  require_same_shape(a.value(), c.value(), "row_dot");
  const Tensor& av = a.value();
  const Tensor& cv = c.value();
  require_matrix(av, "row_dot");
  const std::size_t b = av.shape()[0], e = av.shape()[1];
  Tensor out({b, 1});
  for (std::size_t r = 0; r < b; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < e; ++j) s += av[r * e + j] * cv[r * e + j];
    out[r] = s;
  }
  const std::size_t ai = a.id, ci = c.id;
  return a.tape->record(std::move(out), {a, c}, [ai, ci, b, e](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad_mut(ai);
      const Tensor& cv = t.value(ci);
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t j = 0; j < e; ++j) ga[r * e + j] += g[r] * cv[r * e + j];
    }
    if (t.requires_grad(ci)) {
      Tensor& gc = t.grad_mut(ci);
      const Tensor& av = t.value(ai);
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t j = 0; j < e; ++j) gc[r * e + j] += g[r] * av[r * e + j];
    }
  });
}

}  // namespace drfl::numkernel
