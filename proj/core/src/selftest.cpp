// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "swiftattn/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swiftattn/attention.hpp"
#include "swiftattn/blocks.hpp"
#include "swiftattn/nnops.hpp"
#include "swiftattn/reference_kernels.hpp"
#include "swiftattn/rng.hpp"
#include "swiftattn/tensor.hpp"

namespace swiftattn::selftest {

namespace {

using attention::AdditiveAttentionParams;
using attention::AdditiveTrace;
using reference::Vec;

Vec to_vec(const Tensor<double>& t) { return Vec(t.values().begin(), t.values().end()); }

double max_abs_diff(const Tensor<double>& a, const Vec& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b[i]));
  return worst;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

std::size_t pick(ParamRng& rng, std::size_t lo, std::size_t hi) {
  return lo + std::size_t(rng.canonical() * double(hi - lo + 1));
}

void check(SuiteResult& suite, bool ok) { ok ? ++suite.passed : ++suite.failed; }

// --- oracle equivalence ----------------------------------------------------

SuiteResult oracle_suite(std::uint64_t seed, double fault) {
  SuiteResult suite{"oracle-equivalence"};
  ParamRng rng(mix_seed(seed, 0x0eac1e));

  // Four attention forwards against per-token scalar references.
  for (int c = 0; c < 25; ++c) {
    const std::size_t n = pick(rng, 1, 6);
    std::size_t d = pick(rng, 2, 8);
    const std::size_t heads = (d % 2 == 0 && rng.canonical() < 0.5) ? 2 : 1;
    Tensor<double> x({n, d});
    rng.fill_unit(x);
    const Vec xv = to_vec(x);

    auto dense = attention::make_dense_attention_params<double>(d, heads, rng);
    reference::DenseAttentionRef dense_ref{to_vec(dense.w_query), to_vec(dense.w_key),
                                           to_vec(dense.w_value), to_vec(dense.w_out),
                                           to_vec(dense.out_bias), heads};
    Vec want = reference::attn_standard(xv, n, d, dense_ref);
    for (double& v : want) v += fault;
    check(suite, max_abs_diff(attn_standard(x, dense), want) < 1e-10);

    want = reference::attn_transpose(xv, n, d, dense_ref);
    for (double& v : want) v += fault;
    check(suite, max_abs_diff(attn_transpose(x, dense), want) < 1e-10);

    auto sep = attention::make_separable_params<double>(d, rng);
    reference::SeparableAttentionRef sep_ref{to_vec(sep.score_weight), to_vec(sep.w_key),
                                             to_vec(sep.w_value), to_vec(sep.w_out),
                                             to_vec(sep.out_bias)};
    want = reference::attn_separable(xv, n, d, sep_ref);
    for (double& v : want) v += fault;
    check(suite, max_abs_diff(attn_separable(x, sep), want) < 1e-10);

    auto addp = attention::make_additive_params<double>(d, rng);
    reference::AdditiveAttentionRef add_ref{to_vec(addp.w_query),    to_vec(addp.w_key),
                                            to_vec(addp.attn_vector), to_vec(addp.t_weight),
                                            to_vec(addp.t_bias),      to_vec(addp.out_weight),
                                            to_vec(addp.out_bias)};
    want = reference::attn_additive(xv, n, d, add_ref);
    for (double& v : want) v += fault;
    check(suite, max_abs_diff(attn_additive(x, addp), want) < 1e-10);
  }

  // Both convolution paths against the six-loop reference.
  for (int c = 0; c < 20; ++c) {
    const std::size_t in_c = pick(rng, 1, 4);
    const bool depthwise = rng.canonical() < 0.4;
    const std::size_t groups = depthwise ? in_c : 1;
    const std::size_t out_c = depthwise ? in_c : pick(rng, 1, 4);
    const std::size_t k = rng.canonical() < 0.5 ? 1 : 3;
    const std::size_t stride = pick(rng, 1, 2);
    const std::size_t pad = k == 3 ? pick(rng, 0, 1) : 0;
    const std::size_t h = pick(rng, k, 8);
    const std::size_t w = pick(rng, k, 8);

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
    const Vec bias_v = to_vec(bias);
    Vec want = reference::conv2d(to_vec(x), in_c, h, w, to_vec(p.weights), &bias_v, out_c, k,
                                 stride, pad, groups);
    for (double& v : want) v += fault;
    check(suite, max_abs_diff(nn::conv2d_direct(x, p), want) < 1e-10);
    check(suite, max_abs_diff(nn::conv2d_im2col(x, p), want) < 1e-10);
  }

  // Encoder blocks against explicit step-by-step composition (direct-path
  // convolutions, so this also cross-checks the dispatch).
  for (int c = 0; c < 10; ++c) {
    const std::size_t dim = pick(rng, 2, 5);
    const std::size_t hw = pick(rng, 2, 5);
    blocks::BlockSpec spec{blocks::BlockKind::conv_encoder, dim, dim, 2};
    auto p = blocks::make_conv_encoder<double>(spec, rng);
    Tensor<double> x({dim, hw, hw});
    rng.fill_unit(x);

    Tensor<double> want = nn::conv2d_direct(x, p.dw.conv);
    want = nn::batchnorm_infer(want, *p.dw.bn);
    want = nn::gelu(nn::conv2d_direct(want, p.expand));
    want = nn::conv2d_direct(want, p.project);
    want = add(want, x);
    check(suite, max_abs_diff(blocks::conv_encoder(x, p), add(want, fault)) < 1e-10);
  }
  for (int c = 0; c < 10; ++c) {
    const std::size_t dim = pick(rng, 2, 5);
    const std::size_t hw = pick(rng, 2, 4);
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
    Tensor<double> want = add(y, mixed);
    check(suite, max_abs_diff(blocks::swiftformer_encoder(x, p), add(want, fault)) < 1e-10);
  }
  return suite;
}

// --- properties ------------------------------------------------------------

SuiteResult softmax_shift_suite(std::uint64_t seed) {
  SuiteResult suite{"softmax-shift-invariance"};
  ParamRng rng(mix_seed(seed, 0x50f7));
  for (int c = 0; c < 10; ++c) {
    const std::size_t rows = pick(rng, 1, 6), cols = pick(rng, 2, 9);
    Tensor<double> x({rows, cols});
    rng.fill_unit(x);
    const double shift = rng.symmetric(100.0);
    Tensor<double> base = softmax(x, 1);
    Tensor<double> shifted = softmax(add(x, shift), 1);
    check(suite, max_abs_diff(base, shifted) < 1e-12);
  }
  return suite;
}

SuiteResult alpha_normalization_suite(std::uint64_t seed) {
  SuiteResult suite{"alpha-normalization"};
  ParamRng rng(mix_seed(seed, 0xa1fa));
  for (int c = 0; c < 10; ++c) {
    const std::size_t n = pick(rng, 1, 32), d = pick(rng, 2, 16);
    auto p = attention::make_additive_params<double>(d, rng);
    Tensor<double> x({n, d});
    rng.fill_unit(x);
    AdditiveTrace<double> trace;
    attn_additive(x, p, &trace);
    double sum = 0;
    for (std::size_t i = 0; i < trace.alpha.size(); ++i) sum += trace.alpha(i);
    check(suite, std::abs(sum - 1.0) < 1e-6);
  }
  return suite;
}

SuiteResult permutation_suite(std::uint64_t seed) {
  SuiteResult suite{"permutation-equivariance"};
  ParamRng rng(mix_seed(seed, 0x9e21));
  for (int c = 0; c < 10; ++c) {
    const std::size_t n = pick(rng, 2, 12), d = pick(rng, 2, 12);
    auto p = attention::make_additive_params<double>(d, rng);
    Tensor<double> x({n, d});
    rng.fill_unit(x);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[pick(rng, 0, i - 1)]);

    Tensor<double> px({n, d});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) px(i, j) = x(perm[i], j);

    AdditiveTrace<double> trace, ptrace;
    Tensor<double> y = attn_additive(x, p, &trace);
    Tensor<double> py = attn_additive(px, p, &ptrace);

    double worst = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        worst = std::max(worst, std::abs(py(i, j) - y(perm[i], j)));
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(ptrace.alpha(i) - trace.alpha(perm[i])));
    check(suite, worst < 1e-10);
    // The pooled global query ignores token order entirely.
    check(suite, max_abs_diff(ptrace.global_query, trace.global_query) < 1e-10);
  }
  return suite;
}

SuiteResult fusion_suite(std::uint64_t seed) {
  SuiteResult suite{"bn-fusion"};
  ParamRng rng(mix_seed(seed, 0xf05e));
  for (int c = 0; c < 10; ++c) {
    const std::size_t in_c = pick(rng, 1, 4);
    const bool depthwise = c % 3 == 0;
    const std::size_t groups = depthwise ? in_c : 1;
    const std::size_t out_c = depthwise ? in_c : pick(rng, 1, 4);
    const std::size_t k = c % 2 ? 1 : 3;

    nn::Conv2dParams<float> conv;
    conv.in_channels = in_c;
    conv.out_channels = out_c;
    conv.kernel = k;
    conv.stride = 1;
    conv.padding = k == 3 ? 1 : 0;
    conv.groups = groups;
    conv.weights = Tensor<float>({out_c, in_c / groups, k, k});
    rng.fill_unit(conv.weights);

    nn::BatchNormParams<float> bn;
    bn.gamma = Tensor<float>({out_c});
    bn.beta = Tensor<float>({out_c});
    bn.running_mean = Tensor<float>({out_c});
    bn.running_var = Tensor<float>({out_c});
    rng.fill_unit(bn.gamma);
    rng.fill_unit(bn.beta);
    rng.fill_unit(bn.running_mean);
    for (std::size_t i = 0; i < out_c; ++i) bn.running_var(i) = float(rng.canonical() + 0.1);

    Tensor<float> x({in_c, 6, 6});
    rng.fill_unit(x);
    Tensor<float> unfused = nn::batchnorm_infer(nn::conv2d(x, conv), bn);
    Tensor<float> fused = nn::conv2d(x, nn::fold_bn_into_conv(conv, bn));
    float scale = 1.0f;
    for (float v : unfused.values()) scale = std::max(scale, std::abs(v));
    float worst = 0;
    for (std::size_t i = 0; i < unfused.size(); ++i)
      worst = std::max(worst, std::abs(unfused.data()[i] - fused.data()[i]));
    check(suite, worst <= 1e-6f * scale);
  }
  return suite;
}

SuiteResult residual_identity_suite(std::uint64_t seed) {
  SuiteResult suite{"residual-identity"};
  ParamRng rng(mix_seed(seed, 0x1de9));

  // Conv encoder with every weight zeroed reduces to the identity, exactly.
  {
    const std::size_t dim = 3, hw = 4;
    blocks::BlockSpec spec{blocks::BlockKind::conv_encoder, dim, dim, 4};
    auto p = blocks::make_conv_encoder<double>(spec, rng);
    p.dw.conv.weights = zeros_like(p.dw.conv.weights);
    p.dw.bn = nn::BatchNormParams<double>{Tensor<double>({dim}), Tensor<double>({dim}),
                                          Tensor<double>({dim}), Tensor<double>({dim}), 1e-5};
    p.expand.weights = zeros_like(p.expand.weights);
    p.expand.bias = Tensor<double>({p.expand.out_channels});
    p.project.weights = zeros_like(p.project.weights);
    p.project.bias = Tensor<double>({dim});
    Tensor<double> x({dim, hw, hw});
    rng.fill_unit(x);
    Tensor<double> y = blocks::conv_encoder(x, p);
    bool exact = true;
    for (std::size_t i = 0; i < x.size(); ++i) exact &= x.data()[i] == y.data()[i];
    check(suite, exact);
  }

  // Swiftformer encoder: identity local trunk (delta depth-wise kernel,
  // identity norm, identity pointwise), zeroed attention and linear branches.
  {
    const std::size_t dim = 3, hw = 4;
    blocks::BlockSpec spec{blocks::BlockKind::swiftformer_encoder, dim, dim, 4};
    auto p = blocks::make_swift_encoder<double>(spec, rng);

    p.local_dw.conv.weights = zeros_like(p.local_dw.conv.weights);
    for (std::size_t c = 0; c < dim; ++c) p.local_dw.conv.weights(c, 0, 1, 1) = 1.0;
    p.local_dw.bn = nn::BatchNormParams<double>::identity(dim, 0.0);
    p.local_pw.weights = zeros_like(p.local_pw.weights);
    for (std::size_t c = 0; c < dim; ++c) p.local_pw.weights(c, c, 0, 0) = 1.0;
    p.local_pw.bias = Tensor<double>({dim});

    p.attn.w_query = zeros_like(p.attn.w_query);
    p.attn.w_key = zeros_like(p.attn.w_key);
    p.attn.attn_vector = zeros_like(p.attn.attn_vector);
    p.attn.t_weight = zeros_like(p.attn.t_weight);
    p.attn.t_bias = zeros_like(p.attn.t_bias);
    p.attn.out_weight = zeros_like(p.attn.out_weight);
    p.attn.out_bias = zeros_like(p.attn.out_bias);

    p.mlp_bn = nn::BatchNormParams<double>{Tensor<double>({dim}), Tensor<double>({dim}),
                                           Tensor<double>({dim}), Tensor<double>({dim}), 1e-5};
    p.mlp_expand.weights = zeros_like(p.mlp_expand.weights);
    p.mlp_expand.bias = Tensor<double>({p.mlp_expand.out_channels});
    p.mlp_project.weights = zeros_like(p.mlp_project.weights);
    p.mlp_project.bias = Tensor<double>({dim});

    Tensor<double> x({dim, hw, hw});
    rng.fill_unit(x);
    Tensor<double> y = blocks::swiftformer_encoder(x, p);
    bool exact = true;
    for (std::size_t i = 0; i < x.size(); ++i) exact &= x.data()[i] == y.data()[i];
    check(suite, exact);
  }
  return suite;
}

}  // namespace

GradCheckReport gradient_check(std::size_t cases, std::size_t max_n, std::size_t max_d,
                               std::uint64_t seed, double step) {
  GradCheckReport report;
  report.cases = cases;
  ParamRng rng(mix_seed(seed, 0x96ad));

  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = pick(rng, 1, max_n);
    const std::size_t d = pick(rng, 2, max_d);
    auto p = attention::make_additive_params<double>(d, rng);
    Tensor<double> x({n, d});
    rng.fill_unit(x);
    Tensor<double> upstream({n, d});
    rng.fill_unit(upstream);

    const auto analytic = attn_additive_backward(x, p, upstream);

    auto loss = [&]() {
      Tensor<double> y = attn_additive(x, p);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += upstream.data()[i] * y.data()[i];
      return acc;
    };

    const std::pair<Tensor<double>*, const Tensor<double>*> slots[] = {
        {&x, &analytic.x},
        {&p.w_query, &analytic.w_query},
        {&p.w_key, &analytic.w_key},
        {&p.attn_vector, &analytic.attn_vector},
        {&p.t_weight, &analytic.t_weight},
        {&p.t_bias, &analytic.t_bias},
        {&p.out_weight, &analytic.out_weight},
        {&p.out_bias, &analytic.out_bias},
    };
    for (const auto& [param, grad] : slots) {
      for (std::size_t i = 0; i < param->size(); ++i) {
        const double saved = param->data()[i];
        param->data()[i] = saved + step;
        const double up = loss();
        param->data()[i] = saved - step;
        const double down = loss();
        param->data()[i] = saved;
        const double numeric = (up - down) / (2 * step);
        const double a = grad->data()[i];
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        report.max_rel_error = std::max(report.max_rel_error, rel);
        ++report.entries;
      }
    }
  }
  return report;
}

std::vector<SuiteResult> run_all(const Options& opts) {
  const double fault = opts.inject_fault ? 1e-3 : 0.0;
  std::vector<SuiteResult> results;
  results.push_back(oracle_suite(opts.seed, fault));
  results.push_back(softmax_shift_suite(opts.seed));
  results.push_back(alpha_normalization_suite(opts.seed));
  results.push_back(permutation_suite(opts.seed));

  SuiteResult grad{"gradient-check"};
  const GradCheckReport report = gradient_check(8, 6, 12, opts.seed);
  grad.passed = int(report.cases);
  if (report.max_rel_error >= 1e-4) {
    grad.passed = 0;
    grad.failed = int(report.cases);
  }
  results.push_back(grad);

  results.push_back(fusion_suite(opts.seed));
  results.push_back(residual_identity_suite(opts.seed));
  return results;
}

bool all_passed(const std::vector<SuiteResult>& results) {
  for (const SuiteResult& r : results) {
    if (r.failed != 0 || r.passed == 0) return false;
  }
  return true;
}

}  // namespace swiftattn::selftest
