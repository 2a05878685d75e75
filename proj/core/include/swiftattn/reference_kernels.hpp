// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Deliberately naive double-precision references, written as flat scalar
// loops over std::vector<double>. They share no code with the production
// kernels and exist so equivalence suites have an independent answer to
// compare against. Do not optimize these.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace swiftattn::reference {

using Vec = std::vector<double>;

inline Vec matmul(const Vec& a, const Vec& b, std::size_t m, std::size_t k, std::size_t p) {
  Vec c(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t l = 0; l < k; ++l) c[i * p + j] += a[i * k + l] * b[l * p + j];
  return c;
}

inline Vec softmax(const Vec& z) {
  double peak = z[0];
  for (double v : z) peak = std::max(peak, v);
  Vec out(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

inline double gelu_tanh(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / 3.14159265358979323846) *
                                    (x + 0.044715 * x * x * x)));
}

/// Six nested loops, zero padding, cross-correlation.
inline Vec conv2d(const Vec& x, std::size_t in_c, std::size_t h, std::size_t w, const Vec& wt,
                  const Vec* bias, std::size_t out_c, std::size_t k, std::size_t stride,
                  std::size_t pad, std::size_t groups) {
  const std::size_t out_h = (h + 2 * pad - k) / stride + 1;
  const std::size_t out_w = (w + 2 * pad - k) / stride + 1;
  const std::size_t in_per_group = in_c / groups;
  const std::size_t out_per_group = out_c / groups;
  Vec y(out_c * out_h * out_w, 0.0);
  for (std::size_t oc = 0; oc < out_c; ++oc) {
    const std::size_t grp = oc / out_per_group;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = bias ? (*bias)[oc] : 0.0;
        for (std::size_t icg = 0; icg < in_per_group; ++icg) {
          const std::size_t ic = grp * in_per_group + icg;
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = long(oy * stride + ky) - long(pad);
              const long ix = long(ox * stride + kx) - long(pad);
              if (iy < 0 || iy >= long(h) || ix < 0 || ix >= long(w)) continue;
              acc += x[(ic * h + std::size_t(iy)) * w + std::size_t(ix)] *
                     wt[((oc * in_per_group + icg) * k + ky) * k + kx];
            }
          }
        }
        y[(oc * out_h + oy) * out_w + ox] = acc;
      }
    }
  }
  return y;
}

inline Vec batchnorm(const Vec& x, std::size_t c, std::size_t plane, const Vec& gamma,
                     const Vec& beta, const Vec& mean, const Vec& var, double eps) {
  Vec y(x.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i)
      y[ch * plane + i] =
          (x[ch * plane + i] - mean[ch]) / std::sqrt(var[ch] + eps) * gamma[ch] + beta[ch];
  return y;
}

inline Vec rownorm(const Vec& x, std::size_t n, std::size_t d, double eps) {
  Vec y(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += x[i * d + j] * x[i * d + j];
    const double div = std::max(std::sqrt(sq), eps);
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] = x[i * d + j] / div;
  }
  return y;
}

struct DenseAttentionRef {
  Vec w_query, w_key, w_value, w_out, out_bias;
  std::size_t heads = 1;
};

/// Per-token loops: for every query row, score every key row, normalize,
/// mix values, concatenate heads, project.
inline Vec attn_standard(const Vec& x, std::size_t n, std::size_t d,
                         const DenseAttentionRef& p) {
  const std::size_t dh = d / p.heads;
  Vec q = matmul(x, p.w_query, n, d, d);
  Vec k = matmul(x, p.w_key, n, d, d);
  Vec v = matmul(x, p.w_value, n, d, d);
  Vec concat(n * d, 0.0);
  for (std::size_t h = 0; h < p.heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      Vec logits(n, 0.0);
      for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < dh; ++j)
          logits[t] += q[i * d + h * dh + j] * k[t * d + h * dh + j] / std::sqrt(double(dh));
      Vec w = softmax(logits);
      for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < dh; ++j) concat[i * d + h * dh + j] += w[t] * v[t * d + h * dh + j];
    }
  }
  Vec out = matmul(concat, p.w_out, n, d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += p.out_bias[j];
  return out;
}

inline Vec attn_transpose(const Vec& x, std::size_t n, std::size_t d,
                          const DenseAttentionRef& p) {
  Vec q = matmul(x, p.w_query, n, d, d);
  Vec k = matmul(x, p.w_key, n, d, d);
  Vec v = matmul(x, p.w_value, n, d, d);
  // map[a][b] = softmax over a of (sum_i q[i][a] k[i][b]) / sqrt(d)
  Vec map(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t i = 0; i < n; ++i) map[a * d + b] += q[i * d + a] * k[i * d + b];
  for (double& m : map) m /= std::sqrt(double(d));
  for (std::size_t b = 0; b < d; ++b) {
    Vec col(d);
    for (std::size_t a = 0; a < d; ++a) col[a] = map[a * d + b];
    Vec s = softmax(col);
    for (std::size_t a = 0; a < d; ++a) map[a * d + b] = s[a];
  }
  Vec mixed = matmul(v, map, n, d, d);
  Vec out = matmul(mixed, p.w_out, n, d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += p.out_bias[j];
  return out;
}

struct SeparableAttentionRef {
  Vec score_weight, w_key, w_value, w_out, out_bias;
};

inline Vec attn_separable(const Vec& x, std::size_t n, std::size_t d,
                          const SeparableAttentionRef& p) {
  Vec logits(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) logits[i] += x[i * d + j] * p.score_weight[j];
  Vec scores = softmax(logits);
  Vec k = matmul(x, p.w_key, n, d, d);
  Vec v = matmul(x, p.w_value, n, d, d);
  Vec ctx(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ctx[j] += scores[i] * k[i * d + j];
  Vec gated(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) gated[i * d + j] = v[i * d + j] * ctx[j];
  Vec out = matmul(gated, p.w_out, n, d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += p.out_bias[j];
  return out;
}

struct AdditiveAttentionRef {
  Vec w_query, w_key, attn_vector, t_weight, t_bias, out_weight, out_bias;
  Vec w_value;  // empty unless the value path is exercised
  bool normalize_qk = true;
  double eps = 1e-12;
};

inline Vec attn_additive(const Vec& x, std::size_t n, std::size_t d,
                         const AdditiveAttentionRef& p) {
  Vec q = matmul(x, p.w_query, n, d, d);
  Vec k = matmul(x, p.w_key, n, d, d);
  if (p.normalize_qk) {
    q = rownorm(q, n, d, p.eps);
    k = rownorm(k, n, d, p.eps);
  }
  Vec logits(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) logits[i] += q[i * d + j] * p.attn_vector[j];
  for (double& l : logits) l /= std::sqrt(double(d));
  Vec alpha = softmax(logits);
  Vec pooled(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) pooled[j] += alpha[i] * q[i * d + j];
  Vec gated(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) gated[i * d + j] = k[i * d + j] * pooled[j];
  Vec refined = matmul(gated, p.t_weight, n, d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) refined[i * d + j] += p.t_bias[j];

  Vec pre(n * d);
  if (!p.w_value.empty()) {
    Vec v = matmul(x, p.w_value, n, d, d);
    for (std::size_t i = 0; i < n * d; ++i) pre[i] = q[i] + v[i] * refined[i];
  } else {
    for (std::size_t i = 0; i < n * d; ++i) pre[i] = q[i] + refined[i];
  }
  Vec out = matmul(pre, p.out_weight, n, d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += p.out_bias[j];
  return out;
}

}  // namespace swiftattn::reference
