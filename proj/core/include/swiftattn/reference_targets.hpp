// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Published reference totals for the SwiftFormer model family, used by the
// paramcount and maccount commands as pass/fail targets. Parameters are in
// millions, compute is GMACs for one 224x224 forward pass. A guard test pins
// these numbers against accidental edits.

#pragma once

#include <optional>
#include <string_view>

namespace swiftattn::targets {

struct VariantTargets {
  std::string_view variant;
  double params_millions;
  double gmacs_at_224;
};

inline constexpr VariantTargets kPublished[] = {
    {"xs", 3.5, 0.6},
    {"s", 6.1, 1.0},
    {"l1", 12.1, 1.6},
    {"l3", 28.5, 4.0},
};

inline constexpr double kParamTolerance = 0.05;  // plus or minus 5 percent
inline constexpr double kMacTolerance = 0.10;    // plus or minus 10 percent

inline std::optional<VariantTargets> find(std::string_view variant) {
  for (const VariantTargets& t : kPublished) {
    if (t.variant == variant) return t;
  }
  return std::nullopt;
}

}  // namespace swiftattn::targets
