// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "swiftattn/rng.hpp"
#include "swiftattn/tensor.hpp"

namespace swiftattn::attention {

enum class AttentionVariant { standard, transpose, separable, additive };

inline const char* variant_name(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::standard: return "standard";
    case AttentionVariant::transpose: return "transpose";
    case AttentionVariant::separable: return "separable";
    case AttentionVariant::additive: return "additive";
  }
  return "?";
}

inline std::optional<AttentionVariant> parse_variant(const std::string& s) {
  if (s == "standard") return AttentionVariant::standard;
  if (s == "transpose") return AttentionVariant::transpose;
  if (s == "separable") return AttentionVariant::separable;
  if (s == "additive") return AttentionVariant::additive;
  return std::nullopt;
}

/// How the additive attention normalizes its per-token scores into alpha.
/// softmax is the default; l2 is exposed as an alternative strategy.
enum class AlphaNorm { softmax, l2 };

struct AttentionConfig {
  std::size_t tokens = 0;  // n
  std::size_t dim = 0;     // d
  AttentionVariant variant = AttentionVariant::additive;
  std::size_t heads = 1;          // standard variant only
  bool keep_value_path = false;   // additive: restore the explicit value branch
  bool normalize_qk = true;       // additive: row-normalize Q and K

  void validate() const {
    if (tokens == 0 || dim == 0) {
      throw ShapeError("attention: tokens and dim must be >= 1");
    }
    if (variant == AttentionVariant::standard && (heads == 0 || dim % heads != 0)) {
      throw ShapeError("attention: dim " + std::to_string(dim) +
                       " not divisible by heads " + std::to_string(heads));
    }
  }
};

/// Exact multiply-accumulate count for one forward call, as a closed form.
/// Counting rules are documented next to the formulas in attention.cpp.
std::uint64_t attn_mac_count(const AttentionConfig& cfg);

// ---------------------------------------------------------------------------
// Parameter bundles
// ---------------------------------------------------------------------------

/// Shared by the standard and transpose variants: full Q/K/V projections plus
/// an output projection.
template <class T>
struct DenseAttentionParams {
  Tensor<T> w_query, w_key, w_value;  // d x d
  Tensor<T> w_out;                    // d x d
  Tensor<T> out_bias;                 // d
  std::size_t heads = 1;              // used by the standard variant only
};

/// Separable attention: tokens are scored by a learnable d-vector, keys and
/// values get full projections, and a pooled context vector gates the values.
template <class T>
struct SeparableAttentionParams {
  Tensor<T> score_weight;   // d, maps each token to one context logit
  Tensor<T> w_key, w_value; // d x d
  Tensor<T> w_out;          // d x d
  Tensor<T> out_bias;       // d
};

/// Additive attention: Q/K projections, a learnable scoring vector, a linear
/// refinement of the gated keys, and an output projection. The optional
/// w_value restores the explicit value branch for the ablation variant.
template <class T>
struct AdditiveAttentionParams {
  Tensor<T> w_query, w_key;  // d x d
  Tensor<T> attn_vector;     // d
  Tensor<T> t_weight;        // d x d
  Tensor<T> t_bias;          // d
  Tensor<T> out_weight;      // d x d
  Tensor<T> out_bias;        // d
  std::optional<Tensor<T>> w_value;
  T scale = T(0);            // 1/sqrt(d)
  bool normalize_qk = true;
  AlphaNorm alpha_norm = AlphaNorm::softmax;

  std::size_t dim() const { return attn_vector.extent(0); }
};

/// Introspection hook for the additive forward pass.
template <class T>
struct AdditiveTrace {
  Tensor<T> alpha;         // n
  Tensor<T> global_query;  // d
};

template <class T>
struct AdditiveAttentionGrads {
  Tensor<T> x;
  Tensor<T> w_query, w_key;
  Tensor<T> attn_vector;
  Tensor<T> t_weight, t_bias;
  Tensor<T> out_weight, out_bias;
};

// ---------------------------------------------------------------------------
// Seeded parameter factories (fan-in uniform everywhere, fan_in = d)
// ---------------------------------------------------------------------------

template <class T>
DenseAttentionParams<T> make_dense_attention_params(std::size_t d, std::size_t heads,
                                                    ParamRng& rng) {
  DenseAttentionParams<T> p;
  p.w_query = Tensor<T>({d, d});
  p.w_key = Tensor<T>({d, d});
  p.w_value = Tensor<T>({d, d});
  p.w_out = Tensor<T>({d, d});
  p.out_bias = Tensor<T>({d});
  p.heads = heads;
  rng.fill_fan_in(p.w_query, d);
  rng.fill_fan_in(p.w_key, d);
  rng.fill_fan_in(p.w_value, d);
  rng.fill_fan_in(p.w_out, d);
  rng.fill_fan_in(p.out_bias, d);
  return p;
}

template <class T>
SeparableAttentionParams<T> make_separable_params(std::size_t d, ParamRng& rng) {
  SeparableAttentionParams<T> p;
  p.score_weight = Tensor<T>({d});
  p.w_key = Tensor<T>({d, d});
  p.w_value = Tensor<T>({d, d});
  p.w_out = Tensor<T>({d, d});
  p.out_bias = Tensor<T>({d});
  rng.fill_fan_in(p.score_weight, d);
  rng.fill_fan_in(p.w_key, d);
  rng.fill_fan_in(p.w_value, d);
  rng.fill_fan_in(p.w_out, d);
  rng.fill_fan_in(p.out_bias, d);
  return p;
}

template <class T>
AdditiveAttentionParams<T> make_additive_params(std::size_t d, ParamRng& rng,
                                                bool with_value_path = false) {
  AdditiveAttentionParams<T> p;
  p.w_query = Tensor<T>({d, d});
  p.w_key = Tensor<T>({d, d});
  p.attn_vector = Tensor<T>({d});
  p.t_weight = Tensor<T>({d, d});
  p.t_bias = Tensor<T>({d});
  p.out_weight = Tensor<T>({d, d});
  p.out_bias = Tensor<T>({d});
  p.scale = T(1) / std::sqrt(T(d));
  rng.fill_fan_in(p.w_query, d);
  rng.fill_fan_in(p.w_key, d);
  rng.fill_fan_in(p.attn_vector, d);
  rng.fill_fan_in(p.t_weight, d);
  rng.fill_fan_in(p.t_bias, d);
  rng.fill_fan_in(p.out_weight, d);
  rng.fill_fan_in(p.out_bias, d);
  if (with_value_path) {
    Tensor<T> wv({d, d});
    rng.fill_fan_in(wv, d);
    p.w_value = std::move(wv);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward operators
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void check_tokens(const Tensor<T>& x, std::size_t d, const char* op) {
  if (x.rank() != 2 || x.extent(1) != d) {
    throw ShapeError(std::string(op) + ": token matrix " + shape_to_string(x.shape()) +
                     " does not match parameter dim " + std::to_string(d));
  }
}

}  // namespace detail

/// Multi-head scaled dot-product attention, streamed over query-row blocks so
/// no full n x n score matrix is ever resident.
template <class T>
Tensor<T> attn_standard(const Tensor<T>& x, const DenseAttentionParams<T>& p) {
  const std::size_t d = p.w_query.extent(0);
  detail::check_tokens(x, d, "attn_standard");
  if (p.heads == 0 || d % p.heads != 0) {
    throw ShapeError("attn_standard: dim " + std::to_string(d) + " not divisible by heads " +
                     std::to_string(p.heads));
  }
  const std::size_t n = x.extent(0);
  const std::size_t dh = d / p.heads;
  const T inv_sqrt = T(1) / std::sqrt(T(dh));

  Tensor<T> q = matmul(x, p.w_query);
  Tensor<T> k = matmul(x, p.w_key);
  Tensor<T> v = matmul(x, p.w_value);
  Tensor<T> concat({n, d});

  constexpr std::size_t kBlock = 128;
  Tensor<T> qh({n, dh}), kh({n, dh}), vh({n, dh});
  for (std::size_t h = 0; h < p.heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dh; ++j) {
        qh(i, j) = q(i, off + j);
        kh(i, j) = k(i, off + j);
        vh(i, j) = v(i, off + j);
      }
    }
    Tensor<T> kt = transpose(kh);  // dh x n
    for (std::size_t row0 = 0; row0 < n; row0 += kBlock) {
      const std::size_t rows = std::min(kBlock, n - row0);
      Tensor<T> qblk({rows, dh});
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < dh; ++j) qblk(i, j) = qh(row0 + i, j) * inv_sqrt;
      Tensor<T> scores = matmul(qblk, kt);          // rows x n
      scores = softmax(scores, 1);
      Tensor<T> oblk = matmul(scores, vh);          // rows x dh
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < dh; ++j) concat(row0 + i, off + j) = oblk(i, j);
    }
  }
  Tensor<T> out = matmul(concat, p.w_out);
  return add(out, p.out_bias);
}

/// Attention over the channel dimension: a d x d map applied from the right.
/// The map is normalized down its columns, so every output channel is a
/// convex mix of input channels.
template <class T>
Tensor<T> attn_transpose(const Tensor<T>& x, const DenseAttentionParams<T>& p) {
  const std::size_t d = p.w_query.extent(0);
  detail::check_tokens(x, d, "attn_transpose");
  Tensor<T> q = matmul(x, p.w_query);
  Tensor<T> k = matmul(x, p.w_key);
  Tensor<T> v = matmul(x, p.w_value);
  Tensor<T> map = matmul(transpose(q), k);  // d x d
  map = mul(map, T(1) / std::sqrt(T(d)));
  map = softmax(map, 0);
  Tensor<T> out = matmul(v, map);
  out = matmul(out, p.w_out);
  return add(out, p.out_bias);
}

/// Separable attention: softmax context scores over tokens, a pooled context
/// vector over keys, and element-wise gating of values.
template <class T>
Tensor<T> attn_separable(const Tensor<T>& x, const SeparableAttentionParams<T>& p) {
  const std::size_t d = p.score_weight.extent(0);
  detail::check_tokens(x, d, "attn_separable");
  const std::size_t n = x.extent(0);

  Tensor<T> logits({n});
  for (std::size_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::size_t j = 0; j < d; ++j) acc += x(i, j) * p.score_weight(j);
    logits(i) = acc;
  }
  Tensor<T> scores = softmax(logits, 0);

  Tensor<T> k = matmul(x, p.w_key);
  Tensor<T> v = matmul(x, p.w_value);
  Tensor<T> context({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) context(j) += scores(i) * k(i, j);

  Tensor<T> gated = mul(v, context);
  Tensor<T> out = matmul(gated, p.w_out);
  return add(out, p.out_bias);
}

namespace detail {

template <class T>
Tensor<T> normalize_alpha(const Tensor<T>& logits, AlphaNorm norm) {
  if (norm == AlphaNorm::softmax) return softmax(logits, 0);
  T sq = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) sq += logits(i) * logits(i);
  const T inv = T(1) / std::max(std::sqrt(sq), dtype_traits<T>::norm_eps);
  return mul(logits, inv);
}

}  // namespace detail

/// Efficient additive attention. Every intermediate is n x d or smaller;
/// nothing quadratic in the token count is ever built.
///
///   Q = rownorm(x Wq), K = rownorm(x Wk)
///   alpha = softmax(Q w_a / sqrt(d))       per-token scores
///   g     = sum_i alpha_i Q_i              global query vector
///   out   = (Q + T(K * g)) Wout + b        gated keys, refined, residual
template <class T>
Tensor<T> attn_additive(const Tensor<T>& x, const AdditiveAttentionParams<T>& p,
                        AdditiveTrace<T>* trace = nullptr) {
  const std::size_t d = p.dim();
  detail::check_tokens(x, d, "attn_additive");
  const std::size_t n = x.extent(0);

  Tensor<T> q = matmul(x, p.w_query);
  Tensor<T> k = matmul(x, p.w_key);
  if (p.normalize_qk) {
    q = l2_normalize_rows(q);
    k = l2_normalize_rows(k);
  }

  Tensor<T> logits({n});
  for (std::size_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::size_t j = 0; j < d; ++j) acc += q(i, j) * p.attn_vector(j);
    logits(i) = acc * p.scale;
  }
  Tensor<T> alpha = detail::normalize_alpha(logits, p.alpha_norm);

  Tensor<T> global_query({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) global_query(j) += alpha(i) * q(i, j);

  if (trace) {
    trace->alpha = alpha;
    trace->global_query = global_query;
  }

  Tensor<T> gated = mul(k, global_query);
  Tensor<T> refined = matmul(gated, p.t_weight);
  refined = add(refined, p.t_bias);
  Tensor<T> out = matmul(add(q, refined), p.out_weight);
  return add(out, p.out_bias);
}

/// Ablation variant with the explicit value branch restored: the refined
/// global context gates V = x Wv instead of feeding the residual directly.
template <class T>
Tensor<T> attn_additive_qkv(const Tensor<T>& x, const AdditiveAttentionParams<T>& p,
                            AdditiveTrace<T>* trace = nullptr) {
  if (!p.w_value) {
    throw ShapeError("attn_additive_qkv: parameters carry no value projection");
  }
  const std::size_t d = p.dim();
  detail::check_tokens(x, d, "attn_additive_qkv");
  const std::size_t n = x.extent(0);

  Tensor<T> q = matmul(x, p.w_query);
  Tensor<T> k = matmul(x, p.w_key);
  if (p.normalize_qk) {
    q = l2_normalize_rows(q);
    k = l2_normalize_rows(k);
  }
  Tensor<T> v = matmul(x, *p.w_value);

  Tensor<T> logits({n});
  for (std::size_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::size_t j = 0; j < d; ++j) acc += q(i, j) * p.attn_vector(j);
    logits(i) = acc * p.scale;
  }
  Tensor<T> alpha = detail::normalize_alpha(logits, p.alpha_norm);

  Tensor<T> global_query({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) global_query(j) += alpha(i) * q(i, j);

  if (trace) {
    trace->alpha = alpha;
    trace->global_query = global_query;
  }

  Tensor<T> gated = mul(k, global_query);
  Tensor<T> refined = matmul(gated, p.t_weight);
  refined = add(refined, p.t_bias);
  Tensor<T> out = matmul(add(q, mul(v, refined)), p.out_weight);
  return add(out, p.out_bias);
}

/// Exact reverse-mode gradients of attn_additive with respect to the input
/// and every parameter. Mirrors the forward decomposition step by step.
template <class T>
AdditiveAttentionGrads<T> attn_additive_backward(const Tensor<T>& x,
                                                 const AdditiveAttentionParams<T>& p,
                                                 const Tensor<T>& upstream) {
  const std::size_t d = p.dim();
  detail::check_tokens(x, d, "attn_additive_backward");
  if (!upstream.same_shape(x)) {
    throw ShapeError("attn_additive_backward: upstream " + shape_to_string(upstream.shape()) +
                     " does not match input " + shape_to_string(x.shape()));
  }
  const std::size_t n = x.extent(0);
  const T eps = dtype_traits<T>::norm_eps;

  // Forward pass, keeping every intermediate.
  Tensor<T> a = matmul(x, p.w_query);  // pre-norm queries
  Tensor<T> b = matmul(x, p.w_key);    // pre-norm keys
  Tensor<T> q = p.normalize_qk ? l2_normalize_rows(a) : a;
  Tensor<T> k = p.normalize_qk ? l2_normalize_rows(b) : b;

  Tensor<T> logits({n});
  for (std::size_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::size_t j = 0; j < d; ++j) acc += q(i, j) * p.attn_vector(j);
    logits(i) = acc * p.scale;
  }
  Tensor<T> alpha = detail::normalize_alpha(logits, p.alpha_norm);

  Tensor<T> global_query({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) global_query(j) += alpha(i) * q(i, j);

  Tensor<T> gated = mul(k, global_query);
  Tensor<T> refined = add(matmul(gated, p.t_weight), p.t_bias);
  Tensor<T> residual = add(q, refined);

  // Backward.
  AdditiveAttentionGrads<T> g;
  g.out_weight = matmul(transpose(residual), upstream);
  g.out_bias = Tensor<T>({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) g.out_bias(j) += upstream(i, j);

  Tensor<T> d_residual = matmul(upstream, transpose(p.out_weight));
  Tensor<T> d_q = d_residual;  // residual branch
  Tensor<T>& d_refined = d_residual;

  g.t_weight = matmul(transpose(gated), d_refined);
  g.t_bias = Tensor<T>({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) g.t_bias(j) += d_refined(i, j);
  Tensor<T> d_gated = matmul(d_refined, transpose(p.t_weight));

  Tensor<T> d_k = mul(d_gated, global_query);
  Tensor<T> d_global({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) d_global(j) += d_gated(i, j) * k(i, j);

  // global_query = sum_i alpha_i q_i
  Tensor<T> d_alpha({n});
  for (std::size_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      d_q(i, j) += alpha(i) * d_global(j);
      acc += q(i, j) * d_global(j);
    }
    d_alpha(i) = acc;
  }

  Tensor<T> d_logits({n});
  if (p.alpha_norm == AlphaNorm::softmax) {
    T dot = T(0);
    for (std::size_t i = 0; i < n; ++i) dot += alpha(i) * d_alpha(i);
    for (std::size_t i = 0; i < n; ++i) d_logits(i) = alpha(i) * (d_alpha(i) - dot);
  } else {
    T sq = T(0);
    for (std::size_t i = 0; i < n; ++i) sq += logits(i) * logits(i);
    const T r = std::sqrt(sq);
    if (r > eps) {
      T dot = T(0);
      for (std::size_t i = 0; i < n; ++i) dot += d_alpha(i) * alpha(i);
      for (std::size_t i = 0; i < n; ++i) d_logits(i) = (d_alpha(i) - dot * alpha(i)) / r;
    } else {
      for (std::size_t i = 0; i < n; ++i) d_logits(i) = d_alpha(i) / eps;
    }
  }

  g.attn_vector = Tensor<T>({d});
  for (std::size_t i = 0; i < n; ++i) {
    const T s = p.scale * d_logits(i);
    for (std::size_t j = 0; j < d; ++j) {
      d_q(i, j) += s * p.attn_vector(j);
      g.attn_vector(j) += s * q(i, j);
    }
  }

  // Row normalization backward: q_i = a_i / max(|a_i|, eps).
  auto rownorm_backward = [&](const Tensor<T>& pre, const Tensor<T>& post,
                              const Tensor<T>& d_post) {
    Tensor<T> d_pre({n, d});
    for (std::size_t i = 0; i < n; ++i) {
      T sq = T(0);
      for (std::size_t j = 0; j < d; ++j) sq += pre(i, j) * pre(i, j);
      const T r = std::sqrt(sq);
      if (r > eps) {
        T dot = T(0);
        for (std::size_t j = 0; j < d; ++j) dot += d_post(i, j) * post(i, j);
        for (std::size_t j = 0; j < d; ++j)
          d_pre(i, j) = (d_post(i, j) - dot * post(i, j)) / r;
      } else {
        for (std::size_t j = 0; j < d; ++j) d_pre(i, j) = d_post(i, j) / eps;
      }
    }
    return d_pre;
  };

  Tensor<T> d_a = p.normalize_qk ? rownorm_backward(a, q, d_q) : std::move(d_q);
  Tensor<T> d_b = p.normalize_qk ? rownorm_backward(b, k, d_k) : std::move(d_k);

  g.w_query = matmul(transpose(x), d_a);
  g.w_key = matmul(transpose(x), d_b);
  g.x = add(matmul(d_a, transpose(p.w_query)), matmul(d_b, transpose(p.w_key)));
  return g;
}

}  // namespace swiftattn::attention
