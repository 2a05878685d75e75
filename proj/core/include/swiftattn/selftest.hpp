// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace swiftattn::selftest {

struct SuiteResult {
  std::string name;
  int passed = 0;
  int failed = 0;
};

struct Options {
  std::uint64_t seed = 0;
  /// Perturbs the reference side of the oracle suite by 1e-3, proving the
  /// comparisons can fail. Exit paths for corrupted builds stay honest.
  bool inject_fault = false;
};

/// Runs the oracle-equivalence, gradient-check, fusion, permutation-
/// equivariance and property suites at small sizes.
std::vector<SuiteResult> run_all(const Options& opts = {});

bool all_passed(const std::vector<SuiteResult>& results);

struct GradCheckReport {
  double max_rel_error = 0;
  std::size_t cases = 0;
  std::size_t entries = 0;
};

/// Central finite differences against the analytic backward pass of the
/// additive attention, double precision, over every input and parameter
/// entry. Relative error uses max(|analytic|, |numeric|, 1e-6) as the scale.
GradCheckReport gradient_check(std::size_t cases, std::size_t max_n, std::size_t max_d,
                               std::uint64_t seed, double step = 1e-5);

}  // namespace swiftattn::selftest
