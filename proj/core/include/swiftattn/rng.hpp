// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "swiftattn/tensor.hpp"

namespace swiftattn {

/// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + b * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic parameter initializer. Variates are derived from raw
/// mt19937_64 draws rather than std::uniform_real_distribution, whose mapping
/// is implementation defined; the same seed yields the same bits everywhere.
class ParamRng {
 public:
  explicit ParamRng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double canonical() { return double(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in (-bound, bound).
  double symmetric(double bound) { return bound * (2.0 * canonical() - 1.0); }

  /// Fan-in uniform init: every entry uniform in (-a, a), a = sqrt(1/fan_in).
  template <class T>
  void fill_fan_in(Tensor<T>& t, std::size_t fan_in) {
    const double a = std::sqrt(1.0 / double(fan_in));
    for (T& v : t.values()) v = T(symmetric(a));
  }

  /// Standard-ish values for test inputs: uniform in (-1, 1).
  template <class T>
  void fill_unit(Tensor<T>& t) {
    for (T& v : t.values()) v = T(symmetric(1.0));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace swiftattn
