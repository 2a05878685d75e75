// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "swiftattn/nnops.hpp"
#include "swiftattn/reference_kernels.hpp"
#include "swiftattn/rng.hpp"
#include "test_util.hpp"

using namespace swiftattn;
using testutil::max_abs_diff;
using testutil::to_vec;

namespace {

nn::Conv2dParams<double> random_conv(std::size_t in, std::size_t out, std::size_t k,
                                     std::size_t stride, std::size_t pad, std::size_t groups,
                                     bool bias, ParamRng& rng) {
  nn::Conv2dParams<double> p;
  p.in_channels = in;
  p.out_channels = out;
  p.kernel = k;
  p.stride = stride;
  p.padding = pad;
  p.groups = groups;
  p.weights = Tensor<double>({out, in / groups, k, k});
  rng.fill_unit(p.weights);
  if (bias) {
    Tensor<double> b({out});
    rng.fill_unit(b);
    p.bias = std::move(b);
  }
  return p;
}

nn::BatchNormParams<double> random_bn(std::size_t c, ParamRng& rng) {
  nn::BatchNormParams<double> bn;
  bn.gamma = Tensor<double>({c});
  bn.beta = Tensor<double>({c});
  bn.running_mean = Tensor<double>({c});
  bn.running_var = Tensor<double>({c});
  rng.fill_unit(bn.gamma);
  rng.fill_unit(bn.beta);
  rng.fill_unit(bn.running_mean);
  for (std::size_t i = 0; i < c; ++i) bn.running_var(i) = rng.canonical() + 0.05;
  return bn;
}

}  // namespace

TEST_CASE("conv2d counts overlaps of an all-ones kernel") {
  ParamRng rng(0);
  auto p = random_conv(1, 1, 3, 1, 1, 1, false, rng);
  std::fill(p.weights.values().begin(), p.weights.values().end(), 1.0);
  Tensor<double> x = Tensor<double>::full({1, 3, 3}, 1.0);
  for (auto* conv : {&nn::conv2d_direct<double>, &nn::conv2d_im2col<double>}) {
    Tensor<double> y = (*conv)(x, p);
    CHECK(y(0, 1, 1) == 9.0);
    CHECK(y(0, 0, 0) == 4.0);
    CHECK(y(0, 0, 2) == 4.0);
    CHECK(y(0, 2, 0) == 4.0);
    CHECK(y(0, 2, 2) == 4.0);
    CHECK(y(0, 0, 1) == 6.0);
  }
}

TEST_CASE("identity pointwise kernel preserves the input") {
  ParamRng rng(1);
  auto p = random_conv(3, 3, 1, 1, 0, 1, false, rng);
  p.weights = Tensor<double>({3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) p.weights(c, c, 0, 0) = 1.0;
  Tensor<double> x({3, 4, 5});
  rng.fill_unit(x);
  CHECK(max_abs_diff(nn::conv2d_direct(x, p), to_vec(x)) == 0.0);
  CHECK(max_abs_diff(nn::conv2d_im2col(x, p), to_vec(x)) == 0.0);
}

TEST_CASE("depth-wise strided conv matches the six-loop reference") {
  ParamRng rng(2);
  auto p = random_conv(4, 4, 3, 2, 1, 4, true, rng);
  Tensor<double> x({4, 8, 8});
  rng.fill_unit(x);
  const auto bias = to_vec(*p.bias);
  const auto want =
      reference::conv2d(to_vec(x), 4, 8, 8, to_vec(p.weights), &bias, 4, 3, 2, 1, 4);
  CHECK(max_abs_diff(nn::conv2d_direct(x, p), want) < 1e-10);
  CHECK(max_abs_diff(nn::conv2d_im2col(x, p), want) < 1e-10);
  CHECK(max_abs_diff(nn::conv2d(x, p), want) < 1e-10);
}

TEST_CASE("both conv paths equal the reference over a random corpus") {
  ParamRng rng(3);
  for (int c = 0; c < 30; ++c) {
    const std::size_t in = 1 + std::size_t(rng.canonical() * 4);
    const bool dw = rng.canonical() < 0.4;
    const std::size_t groups = dw ? in : 1;
    const std::size_t out = dw ? in : 1 + std::size_t(rng.canonical() * 4);
    const std::size_t k = rng.canonical() < 0.5 ? 1 : 3;
    const std::size_t stride = 1 + std::size_t(rng.canonical() * 2);
    const std::size_t pad = k == 3 ? std::size_t(rng.canonical() * 2) : 0;
    const std::size_t h = k + std::size_t(rng.canonical() * 6);
    const std::size_t w = k + std::size_t(rng.canonical() * 6);
    auto p = random_conv(in, out, k, stride, pad, groups, true, rng);
    Tensor<double> x({in, h, w});
    rng.fill_unit(x);
    const auto bias = to_vec(*p.bias);
    const auto want = reference::conv2d(to_vec(x), in, h, w, to_vec(p.weights), &bias, out, k,
                                        stride, pad, groups);
    CHECK(max_abs_diff(nn::conv2d_direct(x, p), want) < 1e-10);
    CHECK(max_abs_diff(nn::conv2d_im2col(x, p), want) < 1e-10);
  }
}

TEST_CASE("1x1 dense conv equals a per-pixel linear layer") {
  ParamRng rng(4);
  auto p = random_conv(3, 5, 1, 1, 0, 1, true, rng);
  Tensor<double> x({3, 4, 4});
  rng.fill_unit(x);
  Tensor<double> y = nn::conv2d(x, p);

  // Pixels as rows, conv weights as a 3 x 5 matrix.
  Tensor<double> w({3, 5});
  for (std::size_t o = 0; o < 5; ++o)
    for (std::size_t i = 0; i < 3; ++i) w(i, o) = p.weights(o, i, 0, 0);
  for (std::size_t py = 0; py < 4; ++py) {
    for (std::size_t px = 0; px < 4; ++px) {
      Tensor<double> pixel({1, 3}, {x(0, py, px), x(1, py, px), x(2, py, px)});
      Tensor<double> lin = nn::linear(pixel, w, *p.bias);
      for (std::size_t o = 0; o < 5; ++o)
        CHECK(std::abs(lin(0, o) - y(o, py, px)) < 1e-10);
    }
  }
}

TEST_CASE("conv2d error paths") {
  ParamRng rng(5);
  auto p = random_conv(3, 4, 3, 1, 0, 1, false, rng);
  CHECK_THROWS_AS(nn::conv2d(Tensor<double>({2, 5, 5}), p), ShapeError);
  CHECK_THROWS_AS(nn::conv2d(Tensor<double>({3, 2, 2}), p), ShapeError);

  nn::Conv2dParams<double> bad = p;
  bad.groups = 2;  // 3 in-channels not divisible
  CHECK_THROWS_AS(nn::conv2d(Tensor<double>({3, 5, 5}), bad), ShapeError);
}

TEST_CASE("batchnorm_infer") {
  ParamRng rng(6);
  Tensor<double> x({3, 4, 4});
  rng.fill_unit(x);

  auto ident = nn::BatchNormParams<double>::identity(3);
  CHECK(max_abs_diff(nn::batchnorm_infer(x, ident), to_vec(x)) < 1e-4);

  auto bn = random_bn(3, rng);
  Tensor<double> zero_gamma = Tensor<double>({3});
  auto beta_only = bn;
  beta_only.gamma = zero_gamma;
  Tensor<double> y = nn::batchnorm_infer(x, beta_only);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 16; ++i)
      CHECK(y.data()[c * 16 + i] == doctest::Approx(bn.beta(c)).epsilon(1e-12));

  const auto want = reference::batchnorm(to_vec(x), 3, 16, to_vec(bn.gamma), to_vec(bn.beta),
                                         to_vec(bn.running_mean), to_vec(bn.running_var),
                                         bn.eps);
  CHECK(max_abs_diff(nn::batchnorm_infer(x, bn), want) < 1e-12);

  CHECK_THROWS_AS(nn::batchnorm_infer(Tensor<double>({2, 4, 4}), bn), ShapeError);
}

TEST_CASE("fold_bn_into_conv") {
  ParamRng rng(7);

  SUBCASE("identity norm leaves weights untouched") {
    auto conv = random_conv(2, 3, 3, 1, 1, 1, true, rng);
    auto fused = nn::fold_bn_into_conv(conv, nn::BatchNormParams<double>::identity(3, 0.0));
    CHECK(max_abs_diff(fused.weights, to_vec(conv.weights)) == 0.0);
    CHECK(max_abs_diff(*fused.bias, to_vec(*conv.bias)) == 0.0);
  }

  SUBCASE("pure gain of two doubles the weights") {
    auto conv = random_conv(2, 2, 1, 1, 0, 1, false, rng);
    nn::BatchNormParams<double> bn = nn::BatchNormParams<double>::identity(2, 0.0);
    bn.gamma = Tensor<double>::full({2}, 2.0);
    auto fused = nn::fold_bn_into_conv(conv, bn);
    CHECK(max_abs_diff(fused.weights, to_vec(mul(conv.weights, 2.0))) == 0.0);
  }

  SUBCASE("composition property over a random corpus, depth-wise and pointwise") {
    for (int c = 0; c < 20; ++c) {
      const std::size_t in = 1 + std::size_t(rng.canonical() * 4);
      const bool dw = c % 2 == 0;
      const std::size_t groups = dw ? in : 1;
      const std::size_t out = dw ? in : 1 + std::size_t(rng.canonical() * 4);
      const std::size_t k = c % 3 == 0 ? 3 : 1;
      auto conv = random_conv(in, out, k, 1, k == 3 ? 1 : 0, groups, c % 4 == 0, rng);
      auto bn = random_bn(out, rng);
      Tensor<double> x({in, 5, 5});
      rng.fill_unit(x);
      Tensor<double> unfused = nn::batchnorm_infer(nn::conv2d(x, conv), bn);
      Tensor<double> fused = nn::conv2d(x, nn::fold_bn_into_conv(conv, bn));
      CHECK(max_abs_diff(unfused, fused) < 1e-10);
    }
  }

  SUBCASE("channel mismatch throws") {
    auto conv = random_conv(2, 3, 1, 1, 0, 1, false, rng);
    CHECK_THROWS_AS(nn::fold_bn_into_conv(conv, nn::BatchNormParams<double>::identity(4)),
                    ShapeError);
  }
}

TEST_CASE("gelu") {
  Tensor<double> x({3}, {0.0, 10.0, 1.0});
  Tensor<double> y = nn::gelu(x);
  CHECK(y(0) == 0.0);
  CHECK(std::abs(y(1) - 10.0) < 1e-3);
  // Closed-form value of the tanh approximation at 1.
  const double want = 0.5 * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (1.0 + 0.044715)));
  CHECK(std::abs(y(2) - want) < 1e-15);
  CHECK(y(2) == doctest::Approx(0.841192).epsilon(1e-6));
}

TEST_CASE("global_avg_pool") {
  Tensor<double> flat = Tensor<double>::full({3, 2, 2}, 2.5);
  Tensor<double> pooled = nn::global_avg_pool(flat);
  for (std::size_t c = 0; c < 3; ++c) CHECK(pooled(c) == 2.5);

  Tensor<double> m({1, 2, 2}, {1, 2, 3, 4});
  CHECK(nn::global_avg_pool(m)(0) == 2.5);

  ParamRng rng(8);
  Tensor<double> x({4, 3, 5});
  rng.fill_unit(x);
  Tensor<double> p = nn::global_avg_pool(x);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0;
    for (std::size_t i = 0; i < 15; ++i) mean += x.data()[c * 15 + i];
    mean /= 15;
    CHECK(std::abs(p(c) - mean) < 1e-12);
  }
}

TEST_CASE("linear") {
  Tensor<double> x({1, 2}, {1, 2});
  Tensor<double> w({2, 1}, {1, 1});
  Tensor<double> b({1}, {1});
  Tensor<double> y = nn::linear(x, w, b);
  CHECK(y(0, 0) == 4.0);

  Tensor<double> eye({2, 2}, {1, 0, 0, 1});
  CHECK(max_abs_diff(nn::linear(x, eye, Tensor<double>({2})), to_vec(x)) == 0.0);

  ParamRng rng(9);
  Tensor<double> a({3, 4}), m({4, 2}), bias({2});
  rng.fill_unit(a);
  rng.fill_unit(m);
  rng.fill_unit(bias);
  auto want = reference::matmul(to_vec(a), to_vec(m), 3, 4, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) want[i * 2 + j] += bias(j);
  CHECK(max_abs_diff(nn::linear(a, m, bias), want) < 1e-12);
}
