// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "swiftattn/attention.hpp"
#include "swiftattn/model_spec.hpp"

namespace swiftattn::bench {

/// One timing cell: a variant at one (n, d), medianed over repeats after
/// warmup, with its analytic MAC count alongside.
struct BenchRecord {
  std::string variant;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t repeats = 0;
  std::size_t warmup = 0;
  std::uint64_t median_ns = 0;
  std::uint64_t macs = 0;
  std::string host;
};

/// Log-log least-squares fit of time against token count.
struct ScalingFit {
  double exponent = 0;   // beta
  double intercept = 0;  // ln of the leading constant
  double r_squared = 0;
  std::size_t points = 0;
};

struct AttentionBenchOptions {
  std::vector<std::size_t> tokens;  // ascending
  std::size_t dim = 64;
  std::size_t repeats = 7;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
  bool keep_value_path = false;  // additive only: bench the explicit-value form
  bool parallel_cells = false;   // cells in parallel; timing fidelity is yours
};

/// Times one attention variant across the token sweep, single precision,
/// single-threaded kernels. Inputs at equal (seed, n, d) are identical across
/// variants. Timing degradation is data, never an error.
std::vector<BenchRecord> bench_attention(attention::AttentionVariant variant,
                                         const AttentionBenchOptions& opts);

/// Requires at least 5 distinct token counts spanning at least 16x.
ScalingFit fit_scaling(const std::vector<BenchRecord>& records);

struct ModelBenchOptions {
  std::size_t input = 224;
  std::size_t repeats = 5;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
  bool fused = false;  // fold batch norms before timing
};

/// End-to-end single-precision forward timing of one variant.
BenchRecord bench_model(const models::ModelSpec& spec, const ModelBenchOptions& opts);

std::string host_fingerprint();

/// CSV, one row per record: variant,n,d,repeats,median_ns,macs,host
void write_csv(const std::vector<BenchRecord>& records, std::ostream& out);
void write_csv_file(const std::vector<BenchRecord>& records, const std::string& path);

/// Companion data file: one block of "n median_ns macs" rows per variant,
/// blocks separated by double blank lines for gnuplot's index selection.
void write_gnuplot_file(const std::vector<BenchRecord>& records, const std::string& path);

}  // namespace swiftattn::bench
