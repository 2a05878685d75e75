// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "swiftattn/attention.hpp"

namespace swiftattn::attention {

// Counting rules: 1 MAC = 1 multiply + 1 add. A matmul of (m x k)(k x p) is
// m*k*p MACs. Dot products against a d-vector are d MACs per token. A plain
// element-wise multiply counts as 1 MAC per element. Bias adds, softmax,
// normalizations and scalar rescaling are excluded, matching the usual
// GMACs-reporting convention for convnets.
std::uint64_t attn_mac_count(const AttentionConfig& cfg) {
  cfg.validate();
  const std::uint64_t n = cfg.tokens;
  const std::uint64_t d = cfg.dim;
  const std::uint64_t nd2 = n * d * d;
  const std::uint64_t nd = n * d;

  switch (cfg.variant) {
    case AttentionVariant::standard:
      // Q/K/V/out projections: 4 n d^2. Scores Q K^T and the value mix both
      // cost n^2 d_head per head, summing to n^2 d each across heads.
      return 4 * nd2 + 2 * n * n * d;
    case AttentionVariant::transpose:
      // Q/K/V/out projections plus building and applying the d x d map
      // (n d^2 each). The d x d softmax itself is excluded.
      return 4 * nd2 + 2 * nd2;
    case AttentionVariant::separable:
      // Key/value/out projections; the score branch is a d-vector dot per
      // token, the context pool and the value gate are n d each.
      return 3 * nd2 + 3 * nd;
    case AttentionVariant::additive: {
      // Q/K projections, the T refinement and the out projection: 4 n d^2.
      // Score dots, the alpha-weighted pool and the key gate: n d each.
      std::uint64_t macs = 4 * nd2 + 3 * nd;
      if (cfg.keep_value_path) {
        // Value projection plus one more element-wise gate.
        macs += nd2 + nd;
      }
      return macs;
    }
  }
  return 0;
}

}  // namespace swiftattn::attention
