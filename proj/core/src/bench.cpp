// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "swiftattn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "swiftattn/model.hpp"

#if __has_include(<sys/utsname.h>)
#include <sys/utsname.h>
#define SWIFTATTN_HAVE_UTSNAME 1
#endif

namespace swiftattn::bench {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t median_of(std::vector<std::uint64_t> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t r = samples.size();
  if (r % 2 == 1) return samples[r / 2];
  return (samples[r / 2 - 1] + samples[r / 2]) / 2;
}

/// Runs fn warmup+repeats times and returns the median of the timed runs.
std::uint64_t time_median_ns(std::size_t warmup, std::size_t repeats,
                             const std::function<void()>& fn) {
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<std::uint64_t> samples;
  samples.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    samples.push_back(std::uint64_t(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
  }
  std::uint64_t med = median_of(std::move(samples));
  return med > 0 ? med : 1;  // times are strictly positive
}

BenchRecord run_attention_cell(attention::AttentionVariant variant,
                               const AttentionBenchOptions& opts, std::size_t n,
                               const std::string& host) {
  const std::size_t d = opts.dim;
  // The input stream depends on (seed, n, d) only, so every variant sees the
  // same tokens at equal sizes. Parameters are drawn afterwards.
  ParamRng rng(mix_seed(mix_seed(opts.seed, n), d));
  Tensor<float> x({n, d});
  rng.fill_unit(x);

  attention::AttentionConfig cfg;
  cfg.tokens = n;
  cfg.dim = d;
  cfg.variant = variant;
  cfg.heads = 1;
  cfg.keep_value_path =
      variant == attention::AttentionVariant::additive && opts.keep_value_path;

  std::function<void()> fn;
  switch (variant) {
    case attention::AttentionVariant::standard: {
      auto p = attention::make_dense_attention_params<float>(d, 1, rng);
      fn = [x, p = std::move(p)] { volatile float sink = attn_standard(x, p)(0, 0); (void)sink; };
      break;
    }
    case attention::AttentionVariant::transpose: {
      auto p = attention::make_dense_attention_params<float>(d, 1, rng);
      fn = [x, p = std::move(p)] { volatile float sink = attn_transpose(x, p)(0, 0); (void)sink; };
      break;
    }
    case attention::AttentionVariant::separable: {
      auto p = attention::make_separable_params<float>(d, rng);
      fn = [x, p = std::move(p)] { volatile float sink = attn_separable(x, p)(0, 0); (void)sink; };
      break;
    }
    case attention::AttentionVariant::additive: {
      auto p = attention::make_additive_params<float>(d, rng, cfg.keep_value_path);
      if (cfg.keep_value_path) {
        fn = [x, p = std::move(p)] {
          volatile float sink = attn_additive_qkv(x, p)(0, 0);
          (void)sink;
        };
      } else {
        fn = [x, p = std::move(p)] {
          volatile float sink = attn_additive(x, p)(0, 0);
          (void)sink;
        };
      }
      break;
    }
  }

  BenchRecord rec;
  rec.variant = attention::variant_name(variant);
  if (cfg.keep_value_path) rec.variant += "_qkv";
  rec.n = n;
  rec.d = d;
  rec.repeats = opts.repeats;
  rec.warmup = opts.warmup;
  rec.macs = attention::attn_mac_count(cfg);
  rec.host = host;
  rec.median_ns = time_median_ns(opts.warmup, opts.repeats, fn);
  return rec;
}

}  // namespace

std::vector<BenchRecord> bench_attention(attention::AttentionVariant variant,
                                         const AttentionBenchOptions& opts) {
  if (opts.repeats < 5) {
    throw std::invalid_argument("bench: repeats must be >= 5");
  }
  if (!std::is_sorted(opts.tokens.begin(), opts.tokens.end())) {
    throw std::invalid_argument("bench: token counts must be sorted ascending");
  }
  const std::string host = host_fingerprint();

  std::vector<BenchRecord> records(opts.tokens.size());
  if (!opts.parallel_cells || opts.tokens.size() < 2) {
    for (std::size_t i = 0; i < opts.tokens.size(); ++i) {
      records[i] = run_attention_cell(variant, opts, opts.tokens[i], host);
    }
    return records;
  }

  // Independent cells only; records land in a single collector and keep the
  // sweep order regardless of completion order.
  std::atomic<std::size_t> next{0};
  std::mutex collect;
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                            opts.tokens.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < opts.tokens.size(); i = next.fetch_add(1)) {
        BenchRecord rec = run_attention_cell(variant, opts, opts.tokens[i], host);
        std::lock_guard<std::mutex> lock(collect);
        records[i] = std::move(rec);
      }
    });
  }
  for (auto& th : pool) th.join();
  return records;
}

ScalingFit fit_scaling(const std::vector<BenchRecord>& records) {
  std::vector<std::size_t> ns;
  for (const BenchRecord& r : records) ns.push_back(r.n);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 5) {
    throw std::invalid_argument("fit_scaling: need at least 5 distinct token counts, got " +
                                std::to_string(ns.size()));
  }
  if (ns.back() < 16 * ns.front()) {
    throw std::invalid_argument("fit_scaling: token counts must span at least 16x");
  }

  std::vector<double> xs, ys;
  for (const BenchRecord& r : records) {
    if (r.median_ns == 0) throw std::invalid_argument("fit_scaling: zero time in record");
    xs.push_back(std::log(double(r.n)));
    ys.push_back(std::log(double(r.median_ns)));
  }
  const std::size_t m = xs.size();
  double mean_x = 0, mean_y = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= double(m);
  mean_y /= double(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  ScalingFit fit;
  fit.points = m;
  fit.exponent = sxy / sxx;
  fit.intercept = mean_y - fit.exponent * mean_x;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pred = fit.intercept + fit.exponent * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

BenchRecord bench_model(const models::ModelSpec& spec, const ModelBenchOptions& opts) {
  if (opts.repeats < 5) {
    throw std::invalid_argument("bench: repeats must be >= 5");
  }
  models::Model<float> model = models::Model<float>::build(spec, opts.seed);
  if (opts.fused) model = model.fuse_batchnorm();

  ParamRng rng(mix_seed(opts.seed, opts.input));
  Tensor<float> image({3, opts.input, opts.input});
  rng.fill_unit(image);

  BenchRecord rec;
  rec.variant = spec.name + (opts.fused ? "/fused" : "/unfused");
  rec.n = opts.input;
  rec.d = spec.stages[3].dim;
  rec.repeats = opts.repeats;
  rec.warmup = opts.warmup;
  rec.macs = models::mac_count(spec, opts.input, opts.input).total();
  rec.host = host_fingerprint();
  rec.median_ns = time_median_ns(opts.warmup, opts.repeats, [&] {
    volatile float sink = model.forward(image)(0);
    (void)sink;
  });
  return rec;
}

std::string host_fingerprint() {
  std::ostringstream os;
#ifdef SWIFTATTN_HAVE_UTSNAME
  utsname u{};
  if (uname(&u) == 0) os << u.sysname << ' ' << u.machine << ' ';
#endif
#if defined(__GNUC__) && !defined(__clang__)
  os << "gcc" << __GNUC__ << '.' << __GNUC_MINOR__ << ' ';
#elif defined(__clang__)
  os << "clang" << __clang_major__ << '.' << __clang_minor__ << ' ';
#endif
  os << std::thread::hardware_concurrency() << " threads";
  return os.str();
}

void write_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
  out << "variant,n,d,repeats,median_ns,macs,host\n";
  for (const BenchRecord& r : records) {
    std::string host = r.host;
    std::replace(host.begin(), host.end(), ',', ';');
    out << r.variant << ',' << r.n << ',' << r.d << ',' << r.repeats << ',' << r.median_ns
        << ',' << r.macs << ',' << host << '\n';
  }
}

void write_csv_file(const std::vector<BenchRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("bench: cannot open '" + path + "' for writing");
  write_csv(records, out);
}

void write_gnuplot_file(const std::vector<BenchRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("bench: cannot open '" + path + "' for writing");
  std::vector<std::string> seen;
  for (const BenchRecord& r : records) {
    if (std::find(seen.begin(), seen.end(), r.variant) == seen.end()) seen.push_back(r.variant);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (i) out << "\n\n";
    out << "# variant=" << seen[i] << "  columns: n median_ns macs\n";
    for (const BenchRecord& r : records) {
      if (r.variant == seen[i]) out << r.n << ' ' << r.median_ns << ' ' << r.macs << '\n';
    }
  }
}

}  // namespace swiftattn::bench
