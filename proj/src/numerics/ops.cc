// Copyright 2026 The LEA Authors
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

#include "lea/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lea/error.h"

namespace lea::ops {

namespace {

// Gradient buffer of a node, or nullptr when it does not need one.
double* grad_of(Tape& t, std::size_t id) {
  return t.requires_grad(id) ? t.grad_buffer(id).data() : nullptr;
}

void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ValidationError("ops: variables live on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw ShapeError("matmul: " + shape_to_string(av.shape()) + " x " +
                     shape_to_string(bv.shape()));
  }
  Tensor out({m, n});
  gemm_nn(av.data(), bv.data(), out.data(), m, k, n, false);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (double* ga = grad_of(t, ia)) gemm_nt(g, t.value(ib).data(), ga, m, n, k, true);
    if (double* gb = grad_of(t, ib)) gemm_tn(t.value(ia).data(), g, gb, m, k, n, true);
  });
}

namespace {

Var add_scaled(Var a, Var b, double sign, const char* what) {
  check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) {
    throw ShapeError(std::string(what) + ": " + shape_to_string(av.shape()) + " vs " +
                     shape_to_string(bv.shape()));
  }
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * bv[i];
  const std::size_t ia = a.id, ib = b.id, n = out.size();
  return a.tape->record(std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (double* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    if (double* gb = grad_of(t, ib))
      for (std::size_t i = 0; i < n; ++i) gb[i] += sign * g[i];
  });
}

}  // namespace

Var add(Var a, Var b) { return add_scaled(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_scaled(a, b, -1.0, "sub"); }

Var scale(Var x, double s) {
  Tensor out = x.value();
  for (auto& v : out.storage()) v *= s;
  const std::size_t ix = x.id, n = out.size();
  return x.tape->record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (double* gx = grad_of(t, ix))
      for (std::size_t i = 0; i < n; ++i) gx[i] += s * g[i];
  });
}

Var add_bias(Var x, Var bias) {
  check_same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (bv.size() != n) {
    throw ShapeError("add_bias: bias " + shape_to_string(bv.shape()) + " for input " +
                     shape_to_string(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += bv[j];
  const std::size_t ix = x.id, ib = bias.id;
  return x.tape->record(std::move(out), {ix, ib}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (double* gx = grad_of(t, ix))
      for (std::size_t i = 0; i < m * n; ++i) gx[i] += g[i];
    if (double* gb = grad_of(t, ib))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
  });
}

Var add_tiled(Var x, Var pattern) {
  check_same_tape(x, pattern);
  const Tensor& xv = x.value();
  const Tensor& pv = pattern.value();
  const std::size_t rows = xv.rows(), n = xv.cols(), seq = pv.rows();
  if (pv.cols() != n || rows % seq != 0) {
    throw ShapeError("add_tiled: pattern " + shape_to_string(pv.shape()) +
                     " does not tile input " + shape_to_string(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += pv[(r % seq) * n + j];
  const std::size_t ix = x.id, ip = pattern.id;
  return x.tape->record(std::move(out), {ix, ip}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (double* gx = grad_of(t, ix))
      for (std::size_t i = 0; i < rows * n; ++i) gx[i] += g[i];
    if (double* gp = grad_of(t, ip))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) gp[(r % seq) * n + j] += g[r * n + j];
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  check_same_tape(x, gamma);
  check_same_tape(x, beta);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw ShapeError("layer_norm: affine parameters must have length " + std::to_string(n));
  }
  const double* gv = gamma.value().data();
  const double* bv = beta.value().data();
  Tensor out({m, n});
  std::vector<double> xhat(m * n), rstd(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = xv.data() + r * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (xr[j] - mean) * rstd[r];
      out[r * n + j] = gv[j] * xhat[r * n + j] + bv[j];
    }
  }
  const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
  return x.tape->record(
      std::move(out), {ix, ig, ib},
      [=, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        const double* gam = t.value(ig).data();
        if (double* gg = grad_of(t, ig))
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < n; ++j) gg[j] += g[r * n + j] * xhat[r * n + j];
        if (double* gb = grad_of(t, ib))
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
        if (double* gx = grad_of(t, ix)) {
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t r = 0; r < m; ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g[r * n + j] * gam[j];
              mean_d += d;
              mean_dx += d * xhat[r * n + j];
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g[r * n + j] * gam[j];
              gx[r * n + j] += rstd[r] * (d - mean_d - xhat[r * n + j] * mean_dx);
            }
          }
        }
      });
}

Var gelu(Var x) {
  Tensor out = x.value();
  const std::size_t n = out.size();
  for (auto& v : out.storage()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    const double* xv = t.value(ix).data();
    if (double* gx = grad_of(t, ix)) {
      constexpr double inv_sqrt_2pi = 0.3989422804014327;
      for (std::size_t i = 0; i < n; ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(xv[i] * std::numbers::sqrt2 / 2.0));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * xv[i] * xv[i]);
        gx[i] += g[i] * (cdf + xv[i] * pdf);
      }
    }
  });
}

namespace {

void softmax_inplace(double* row, std::size_t n) {
  double mx = row[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    s += row[j];
  }
  for (std::size_t j = 0; j < n; ++j) row[j] /= s;
}

}  // namespace

Var softmax_rows(Var x) {
  Tensor out = x.value();
  const std::size_t m = out.rows(), n = out.cols();
  for (std::size_t r = 0; r < m; ++r) softmax_inplace(out.data() + r * n, n);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    const double* y = t.value(self).data();
    if (double* gx = grad_of(t, ix)) {
      for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[r * n + j] * y[r * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[r * n + j] * (g[r * n + j] - s);
      }
    }
  });
}

Var attention(Var qkv, std::size_t batch, std::size_t seq, std::size_t heads) {
  const Tensor& in = qkv.value();
  const std::size_t width = in.cols();
  if (in.rows() != batch * seq || width % 3 != 0 || (width / 3) % heads != 0) {
    throw ShapeError("attention: input " + shape_to_string(in.shape()) + " for batch " +
                     std::to_string(batch) + ", seq " + std::to_string(seq) + ", heads " +
                     std::to_string(heads));
  }
  const std::size_t d = width / 3, dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor out({batch * seq, d});
  std::vector<double> probs(batch * heads * seq * seq);
  const double* src = in.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      double* p = probs.data() + (b * heads + h) * seq * seq;
      for (std::size_t i = 0; i < seq; ++i) {
        const double* q = src + (b * seq + i) * width + h * dh;
        for (std::size_t j = 0; j < seq; ++j) {
          const double* k = src + (b * seq + j) * width + d + h * dh;
          double s = 0.0;
          for (std::size_t e = 0; e < dh; ++e) s += q[e] * k[e];
          p[i * seq + j] = s * sc;
        }
        softmax_inplace(p + i * seq, seq);
        double* o = out.data() + (b * seq + i) * d + h * dh;
        for (std::size_t j = 0; j < seq; ++j) {
          const double pij = p[i * seq + j];
          const double* v = src + (b * seq + j) * width + 2 * d + h * dh;
          for (std::size_t e = 0; e < dh; ++e) o[e] += pij * v[e];
        }
      }
    }
  }
  const std::size_t ix = qkv.id;
  return qkv.tape->record(
      std::move(out), {ix}, [=, probs = std::move(probs)](Tape& t, std::size_t self) {
        double* gin = grad_of(t, ix);
        if (!gin) return;
        const double* g = t.grad(self).data();
        const double* x = t.value(ix).data();
        std::vector<double> dp(seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const double* p = probs.data() + (b * heads + h) * seq * seq;
            for (std::size_t i = 0; i < seq; ++i) {
              const double* go = g + (b * seq + i) * d + h * dh;
              double dot_pdp = 0.0;
              for (std::size_t j = 0; j < seq; ++j) {
                const std::size_t rj = (b * seq + j) * width;
                const double* v = x + rj + 2 * d + h * dh;
                double* gv = gin + rj + 2 * d + h * dh;
                const double pij = p[i * seq + j];
                double s = 0.0;
                for (std::size_t e = 0; e < dh; ++e) {
                  s += go[e] * v[e];
                  gv[e] += pij * go[e];
                }
                dp[j] = s;
                dot_pdp += pij * s;
              }
              const std::size_t ri = (b * seq + i) * width;
              const double* q = x + ri + h * dh;
              double* gq = gin + ri + h * dh;
              for (std::size_t j = 0; j < seq; ++j) {
                const double ds = p[i * seq + j] * (dp[j] - dot_pdp) * sc;
                const std::size_t rj = (b * seq + j) * width;
                const double* k = x + rj + d + h * dh;
                double* gk = gin + rj + d + h * dh;
                for (std::size_t e = 0; e < dh; ++e) {
                  gq[e] += ds * k[e];
                  gk[e] += ds * q[e];
                }
              }
            }
          }
        }
      });
}

Var dropout(Var x, double p, RngStream& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ValidationError("dropout probability must be < 1");
  Tensor out = x.value();
  const std::size_t n = out.size();
  const double keep = 1.0 / (1.0 - p);
  std::vector<double> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = rng.uniform() < p ? 0.0 : keep;
    out[i] *= mask[i];
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix},
                        [=, mask = std::move(mask)](Tape& t, std::size_t self) {
                          const double* g = t.grad(self).data();
                          if (double* gx = grad_of(t, ix))
                            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * mask[i];
                        });
}

Var gather_rows(Var x, std::vector<long> index) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols(), src_rows = xv.rows();
  for (long i : index) {
    if (i >= static_cast<long>(src_rows)) {
      throw ShapeError("gather_rows: index " + std::to_string(i) + " out of range for " +
                       std::to_string(src_rows) + " rows");
    }
  }
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  Tensor out({index.size(), n});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0) continue;
    std::copy_n(xv.data() + index[r] * n, n, out.data() + r * n);
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix},
                        [=, index = std::move(index)](Tape& t, std::size_t self) {
                          const double* g = t.grad(self).data();
                          double* gx = grad_of(t, ix);
                          if (!gx) return;
                          for (std::size_t r = 0; r < index.size(); ++r) {
                            if (index[r] < 0) continue;
                            double* dst = gx + index[r] * n;
                            for (std::size_t j = 0; j < n; ++j) dst[j] += g[r * n + j];
                          }
                        });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = parts[0].value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids, offsets;
  for (const Var& p : parts) {
    check_same_tape(parts[0], p);
    if (p.value().cols() != n) throw ShapeError("concat_rows: column count mismatch");
    ids.push_back(p.id);
    offsets.push_back(rows);
    rows += p.value().rows();
  }
  Tensor out({rows, n});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& v = parts[i].value();
    std::copy(v.data(), v.data() + v.size(), out.data() + offsets[i] * n);
  }
  Tape* tape = parts[0].tape;
  return tape->record(std::move(out), ids, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* gp = grad_of(t, ids[i]);
      if (!gp) continue;
      const std::size_t cnt = t.value(ids[i]).size();
      const double* src = g + offsets[i] * n;
      for (std::size_t j = 0; j < cnt; ++j) gp[j] += src[j];
    }
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (count == 0 || begin + count > n) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + std::to_string(n));
  }
  Tensor out({m, count});
  for (std::size_t r = 0; r < m; ++r)
    std::copy_n(xv.data() + r * n + begin, count, out.data() + r * count);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (double* gx = grad_of(t, ix))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < count; ++j) gx[r * n + begin + j] += g[r * count + j];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::size_t n = 0;
  std::vector<std::size_t> ids, offsets, widths;
  for (const Var& p : parts) {
    check_same_tape(parts[0], p);
    if (p.value().rows() != m) throw ShapeError("concat_cols: row count mismatch");
    ids.push_back(p.id);
    offsets.push_back(n);
    widths.push_back(p.value().cols());
    n += p.value().cols();
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& v = parts[i].value();
    for (std::size_t r = 0; r < m; ++r)
      std::copy_n(v.data() + r * widths[i], widths[i], out.data() + r * n + offsets[i]);
  }
  return parts[0].tape->record(std::move(out), ids, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* gp = grad_of(t, ids[i]);
      if (!gp) continue;
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < widths[i]; ++j)
          gp[r * widths[i] + j] += g[r * n + offsets[i] + j];
    }
  });
}

Var conv1d_same(Var x, Var weight, Var bias) {
  check_same_tape(x, weight);
  check_same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const std::size_t batch = xv.rows(), n = xv.cols();
  const std::size_t channels = wv.rows(), k = wv.cols();
  if (k % 2 == 0) throw ShapeError("conv1d_same: kernel size must be odd");
  if (bias.value().size() != channels) throw ShapeError("conv1d_same: bias length mismatch");
  const long half = static_cast<long>(k / 2);
  const double* bv = bias.value().data();
  Tensor out({batch * channels, n});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = xv.data() + b * n;
    for (std::size_t c = 0; c < channels; ++c) {
      double* o = out.data() + (b * channels + c) * n;
      for (std::size_t j = 0; j < n; ++j) {
        double s = bv[c];
        for (std::size_t q = 0; q < k; ++q) {
          const long src = static_cast<long>(j) + static_cast<long>(q) - half;
          if (src >= 0 && src < static_cast<long>(n)) s += wv[c * k + q] * xr[src];
        }
        o[j] = s;
      }
    }
  }
  const std::size_t ix = x.id, iw = weight.id, ib = bias.id;
  return x.tape->record(std::move(out), {ix, iw, ib}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    const double* xd = t.value(ix).data();
    const double* wd = t.value(iw).data();
    double* gx = grad_of(t, ix);
    double* gw = grad_of(t, iw);
    double* gb = grad_of(t, ib);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double* go = g + (b * channels + c) * n;
        for (std::size_t j = 0; j < n; ++j) {
          if (gb) gb[c] += go[j];
          for (std::size_t q = 0; q < k; ++q) {
            const long src = static_cast<long>(j) + static_cast<long>(q) - half;
            if (src < 0 || src >= static_cast<long>(n)) continue;
            if (gw) gw[c * k + q] += go[j] * xd[b * n + src];
            if (gx) gx[b * n + src] += go[j] * wd[c * k + q];
          }
        }
      }
    }
  });
}

Var channel_mix(Var y, Var weight, Var bias, std::size_t channels) {
  check_same_tape(y, weight);
  check_same_tape(y, bias);
  const Tensor& yv = y.value();
  const std::size_t rows = yv.rows(), n = yv.cols();
  if (rows % channels != 0 || weight.value().size() != channels || bias.value().size() != 1) {
    throw ShapeError("channel_mix: input " + shape_to_string(yv.shape()) + " with " +
                     std::to_string(channels) + " channels");
  }
  const std::size_t batch = rows / channels;
  const double* wv = weight.value().data();
  const double b0 = bias.value()[0];
  Tensor out({batch, n}, b0);
  for (std::size_t b = 0; b < batch; ++b) {
    double* o = out.data() + b * n;
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = yv.data() + (b * channels + c) * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += wv[c] * src[j];
    }
  }
  const std::size_t iy = y.id, iw = weight.id, ib = bias.id;
  return y.tape->record(std::move(out), {iy, iw, ib}, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    const double* yd = t.value(iy).data();
    const double* wd = t.value(iw).data();
    double* gy = grad_of(t, iy);
    double* gw = grad_of(t, iw);
    double* gb = grad_of(t, ib);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* go = g + b * n;
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t r = (b * channels + c) * n;
        for (std::size_t j = 0; j < n; ++j) {
          if (gy) gy[r + j] += wd[c] * go[j];
          if (gw) gw[c] += yd[r + j] * go[j];
        }
      }
      if (gb)
        for (std::size_t j = 0; j < n; ++j) gb[0] += go[j];
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t ix = x.id, n = x.value().size();
  return x.tape->record(Tensor::scalar(s), {ix}, [=](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (double* gx = grad_of(t, ix))
      for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

Var sum_squares(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v * v;
  const std::size_t ix = x.id, n = x.value().size();
  return x.tape->record(Tensor::scalar(s), {ix}, [=](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const double* xv = t.value(ix).data();
    if (double* gx = grad_of(t, ix))
      for (std::size_t i = 0; i < n; ++i) gx[i] += 2.0 * g * xv[i];
  });
}

Var mean_row_sq_norm(Var x) {
  const double rows = static_cast<double>(x.value().rows());
  return scale(sum_squares(x), 1.0 / rows);
}

}  // namespace lea::ops
