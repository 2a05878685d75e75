// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: every release criterion as one checked, timed run.
// Usage: acceptance [--criterion N] [--cli /path/to/swiftattn]
// Prints one PASS/FAIL line per criterion; exits nonzero if any ran red.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "swiftattn/bench.hpp"
#include "swiftattn/model.hpp"
#include "swiftattn/reference_kernels.hpp"
#include "swiftattn/reference_targets.hpp"
#include "swiftattn/selftest.hpp"

namespace {

using namespace swiftattn;

std::string g_cli_path;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// --- 1: parameter counts ----------------------------------------------------

Outcome criterion_params() {
  std::ostringstream detail;
  bool pass = true;
  for (const std::string& name : models::preset_names()) {
    const auto model = models::Model<float>::build(*models::preset(name), 0);
    const auto counts = models::param_count(model);
    const auto target = targets::find(name);
    const double want = target->params_millions * 1e6;
    const double delta = (double(counts.total()) - want) / want;
    detail << name << " " << counts.total() << " (" << std::fixed << std::setprecision(2)
           << delta * 100 << "%) ";
    if (std::abs(delta) > targets::kParamTolerance) {
      pass = false;
      // The breakdown localizes the residual: report the heaviest parts.
      detail << "[breakdown:";
      for (const auto& [part, value] : counts.parts) detail << ' ' << part << '=' << value;
      detail << "] ";
    }
  }
  return {pass, detail.str()};
}

// --- 2: MAC counts ----------------------------------------------------------

Outcome criterion_macs() {
  std::ostringstream detail;
  bool pass = true;
  for (const std::string& name : models::preset_names()) {
    const auto bd = models::mac_count(*models::preset(name), 224, 224);
    const auto target = targets::find(name);
    const double want = target->gmacs_at_224 * 1e9;
    const double delta = (double(bd.total()) - want) / want;
    detail << name << " " << std::fixed << std::setprecision(4) << double(bd.total()) / 1e9
           << "G (" << std::setprecision(2) << delta * 100 << "%) ";
    if (std::abs(delta) > targets::kMacTolerance) pass = false;
  }
  return {pass, detail.str()};
}

// --- 3: exact linearity of additive MACs ------------------------------------

Outcome criterion_linearity() {
  for (std::size_t n : {64u, 256u, 1024u}) {
    for (std::size_t d : {64u, 256u}) {
      attention::AttentionConfig half{n, d, attention::AttentionVariant::additive};
      attention::AttentionConfig full{2 * n, d, attention::AttentionVariant::additive};
      if (attn_mac_count(full) != 2 * attn_mac_count(half)) {
        return {false, "MACs(2n) != 2*MACs(n) at n=" + std::to_string(n) +
                           " d=" + std::to_string(d)};
      }
    }
  }
  return {true, "MACs(2n,d) == 2*MACs(n,d) for n in {64,256,1024}, d in {64,256}"};
}

// --- 4: empirical scaling ---------------------------------------------------

Outcome criterion_scaling() {
  bench::AttentionBenchOptions opts;
  opts.tokens = {256, 512, 1024, 2048, 4096, 8192, 16384};
  opts.dim = 64;
  opts.repeats = 5;
  opts.warmup = 3;
  opts.seed = 0;

  const auto additive =
      bench::fit_scaling(bench::bench_attention(attention::AttentionVariant::additive, opts));
  const auto standard =
      bench::fit_scaling(bench::bench_attention(attention::AttentionVariant::standard, opts));

  std::ostringstream detail;
  detail << std::fixed << std::setprecision(3) << "additive beta=" << additive.exponent
         << " r2=" << additive.r_squared << ", standard beta=" << standard.exponent
         << " r2=" << standard.r_squared;
  const bool pass = additive.exponent >= 0.8 && additive.exponent <= 1.3 &&
                    standard.exponent >= 1.6 && standard.exponent <= 2.3 &&
                    additive.r_squared >= 0.97 && standard.r_squared >= 0.97;
  return {pass, detail.str()};
}

// --- 5: gradient verification -----------------------------------------------

Outcome criterion_gradients() {
  const auto report = selftest::gradient_check(20, 8, 16, 0, 1e-5);
  std::ostringstream detail;
  detail << report.entries << " entries, max rel err " << std::scientific
         << std::setprecision(3) << report.max_rel_error;
  return {report.max_rel_error < 1e-4, detail.str()};
}

// --- 6: oracle equivalence --------------------------------------------------

reference::Vec to_vec(const Tensor<double>& t) {
  return reference::Vec(t.values().begin(), t.values().end());
}

double diff(const Tensor<double>& a, const reference::Vec& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b[i]));
  return worst;
}

double diff(const Tensor<double>& a, const Tensor<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

Outcome criterion_oracles() {
  ParamRng rng(0xacce97);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + std::size_t(rng.canonical() * double(hi - lo + 1));
  };
  double worst = 0;
  std::size_t instances = 0;

  for (int c = 0; c < 50; ++c) {
    const std::size_t n = pick(1, 6);
    const std::size_t d = pick(2, 8);
    const std::size_t heads = (d % 2 == 0 && c % 2 == 0) ? 2 : 1;
    Tensor<double> x({n, d});
    rng.fill_unit(x);
    const auto xv = to_vec(x);

    auto dense = attention::make_dense_attention_params<double>(d, heads, rng);
    reference::DenseAttentionRef dense_ref{to_vec(dense.w_query), to_vec(dense.w_key),
                                           to_vec(dense.w_value), to_vec(dense.w_out),
                                           to_vec(dense.out_bias), heads};
    worst = std::max(worst, diff(attn_standard(x, dense),
                                 reference::attn_standard(xv, n, d, dense_ref)));
    worst = std::max(worst, diff(attn_transpose(x, dense),
                                 reference::attn_transpose(xv, n, d, dense_ref)));

    auto sep = attention::make_separable_params<double>(d, rng);
    reference::SeparableAttentionRef sep_ref{to_vec(sep.score_weight), to_vec(sep.w_key),
                                             to_vec(sep.w_value), to_vec(sep.w_out),
                                             to_vec(sep.out_bias)};
    worst = std::max(worst, diff(attn_separable(x, sep),
                                 reference::attn_separable(xv, n, d, sep_ref)));

    auto addp = attention::make_additive_params<double>(d, rng);
    reference::AdditiveAttentionRef add_ref{to_vec(addp.w_query),    to_vec(addp.w_key),
                                            to_vec(addp.attn_vector), to_vec(addp.t_weight),
                                            to_vec(addp.t_bias),      to_vec(addp.out_weight),
                                            to_vec(addp.out_bias)};
    worst = std::max(worst, diff(attn_additive(x, addp),
                                 reference::attn_additive(xv, n, d, add_ref)));
    instances += 4;
  }

  for (int c = 0; c < 50; ++c) {
    const std::size_t in_c = pick(1, 4);
    const bool dw = c % 3 == 0;
    const std::size_t groups = dw ? in_c : 1;
    const std::size_t out_c = dw ? in_c : pick(1, 4);
    const std::size_t k = c % 2 ? 1 : 3;
    const std::size_t stride = pick(1, 2);
    const std::size_t pad = k == 3 ? pick(0, 1) : 0;
    const std::size_t h = pick(k, 8), w = pick(k, 8);

    nn::Conv2dParams<double> p;
    p.in_channels = in_c;
    p.out_channels = out_c;
    p.kernel = k;
    p.stride = stride;
    p.padding = pad;
    p.groups = groups;
    p.weights = Tensor<double>({out_c, in_c / groups, k, k});
    rng.fill_unit(p.weights);
    Tensor<double> bias({out_c});
    rng.fill_unit(bias);
    p.bias = bias;
    Tensor<double> x({in_c, h, w});
    rng.fill_unit(x);
    const auto bias_v = to_vec(bias);
    const auto want = reference::conv2d(to_vec(x), in_c, h, w, to_vec(p.weights), &bias_v,
                                        out_c, k, stride, pad, groups);
    worst = std::max(worst, diff(nn::conv2d_direct(x, p), want));
    worst = std::max(worst, diff(nn::conv2d_im2col(x, p), want));
    instances += 2;
  }

  for (int c = 0; c < 50; ++c) {
    const std::size_t dim = pick(2, 5), hw = pick(2, 4);
    {
      blocks::BlockSpec spec{blocks::BlockKind::conv_encoder, dim, dim, 2};
      auto p = blocks::make_conv_encoder<double>(spec, rng);
      Tensor<double> x({dim, hw, hw});
      rng.fill_unit(x);
      Tensor<double> want = nn::conv2d_direct(x, p.dw.conv);
      want = nn::batchnorm_infer(want, *p.dw.bn);
      want = nn::gelu(nn::conv2d_direct(want, p.expand));
      want = nn::conv2d_direct(want, p.project);
      want = add(want, x);
      worst = std::max(worst, diff(blocks::conv_encoder(x, p), want));
    }
    {
      blocks::BlockSpec spec{blocks::BlockKind::swiftformer_encoder, dim, dim, 2};
      auto p = blocks::make_swift_encoder<double>(spec, rng);
      Tensor<double> x({dim, hw, hw});
      rng.fill_unit(x);
      Tensor<double> local = nn::conv2d_direct(x, p.local_dw.conv);
      local = nn::batchnorm_infer(local, *p.local_dw.bn);
      local = nn::conv2d_direct(local, p.local_pw);
      Tensor<double> tokens = blocks::flatten_tokens(local);
      Tensor<double> mixed = blocks::unflatten_tokens(
          add(attention::attn_additive(tokens, p.attn), tokens), dim, hw, hw);
      Tensor<double> y = nn::batchnorm_infer(mixed, p.mlp_bn);
      y = nn::gelu(nn::conv2d_direct(y, p.mlp_expand));
      y = nn::conv2d_direct(y, p.mlp_project);
      worst = std::max(worst, diff(blocks::swiftformer_encoder(x, p), add(y, mixed)));
    }
    instances += 2;
  }

  std::ostringstream detail;
  detail << instances << " instances, worst deviation " << std::scientific
         << std::setprecision(3) << worst;
  return {worst < 1e-10, detail.str()};
}

// --- 7: property suite through selftest --------------------------------------

Outcome criterion_selftest() {
  const auto results = selftest::run_all({});
  std::ostringstream detail;
  int suites = 0, checks = 0;
  for (const auto& suite : results) {
    suites += 1;
    checks += suite.passed;
    if (suite.failed) detail << suite.name << " failed " << suite.failed << "; ";
  }
  detail << suites << " suites, " << checks << " checks";
  return {selftest::all_passed(results), detail.str()};
}

// --- 8: value-path ablation costs strictly more ------------------------------

Outcome criterion_ablation() {
  for (std::size_t n : {16u, 196u, 1024u, 4096u, 16384u}) {
    for (std::size_t d : {32u, 64u, 256u, 512u}) {
      attention::AttentionConfig plain{n, d, attention::AttentionVariant::additive};
      attention::AttentionConfig qkv = plain;
      qkv.keep_value_path = true;
      if (attn_mac_count(qkv) <= attn_mac_count(plain)) {
        return {false, "value path not strictly heavier at n=" + std::to_string(n)};
      }
    }
  }

  bench::AttentionBenchOptions opts;
  opts.tokens = {4096};
  opts.dim = 256;
  opts.repeats = 50;
  opts.warmup = 3;
  const auto plain = bench::bench_attention(attention::AttentionVariant::additive, opts);
  opts.keep_value_path = true;
  const auto qkv = bench::bench_attention(attention::AttentionVariant::additive, opts);

  std::ostringstream detail;
  detail << "median additive " << plain[0].median_ns / 1000000.0 << " ms, with value path "
         << qkv[0].median_ns / 1000000.0 << " ms over 50 repeats";
  return {qkv[0].median_ns >= plain[0].median_ns, detail.str()};
}

// --- 9: determinism through the CLI ------------------------------------------

std::string run_cli(const std::string& args, const std::string& out_path) {
  const std::string cmd = g_cli_path + " " + args + " > " + out_path + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw std::runtime_error("cli exited nonzero: " + cmd);
  std::ifstream in(out_path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome criterion_determinism() {
  if (g_cli_path.empty()) {
    return {false, "no --cli path given; cannot drive the binary"};
  }
  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string base = dir + "/swiftattn_accept_" + std::to_string(::getpid());

  const std::string first = run_cli("paramcount --variant xs", base + ".out1");
  const std::string second = run_cli("paramcount --variant xs", base + ".out2");
  if (first != second || first.empty()) {
    return {false, "paramcount output differs between runs"};
  }

  // A small custom spec keeps the weight files quick to write and compare.
  {
    std::ofstream spec(base + ".spec");
    spec << "name=accept\nstem=4,8\ndims=8,12,16,24\nconv_blocks=1,1,1,1\nclasses=2\n";
  }
  const std::string save_args = "weights save --variant custom:" + base +
                                ".spec --seed 0 --precision f32 --out ";
  run_cli(save_args + base + ".w1", base + ".log1");
  run_cli(save_args + base + ".w2", base + ".log2");
  std::ifstream w1(base + ".w1", std::ios::binary), w2(base + ".w2", std::ios::binary);
  const std::string bytes1((std::istreambuf_iterator<char>(w1)), {});
  const std::string bytes2((std::istreambuf_iterator<char>(w2)), {});
  if (bytes1.empty() || bytes1 != bytes2) {
    return {false, "weight files differ between identically seeded saves"};
  }

  // Bit-exact round trip, CRC included, through the library.
  const auto loaded = models::load_weights<float>(base + ".w1");
  const auto spec = models::parse_spec_file(base + ".spec");
  auto model = models::Model<float>::build(spec, 0);
  if (!model.weights().bitwise_equal(loaded.bundle)) {
    return {false, "round-tripped bundle is not bitwise equal"};
  }

  for (const char* suffix : {".out1", ".out2", ".spec", ".w1", ".w2", ".log1", ".log2"}) {
    std::filesystem::remove(base + suffix);
  }
  return {true, "paramcount stable, saves byte-identical, round trip bit-exact"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "parameter counts within 5% of published totals", criterion_params},
      {2, "MAC counts within 10% of published GMACs", criterion_macs},
      {3, "additive MACs exactly linear in token count", criterion_linearity},
      {4, "empirical scaling exponents", criterion_scaling},
      {5, "analytic backward vs finite differences", criterion_gradients},
      {6, "oracle equivalence at 1e-10", criterion_oracles},
      {7, "property suite green via selftest", criterion_selftest},
      {8, "value-path ablation strictly heavier", criterion_ablation},
      {9, "determinism and bit-exact persistence", criterion_determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--cli" && i + 1 < argc) {
      g_cli_path = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--criterion N] [--cli /path/to/swiftattn]\n";
      return 2;
    }
  }

  bool all_pass = true;
  for (const auto& criterion : criteria()) {
    if (only != 0 && criterion.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s (%.1fs) %s\n", outcome.pass ? "PASS" : "FAIL",
                criterion.id, criterion.name, secs, outcome.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
