// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "swiftattn/attention.hpp"
#include "swiftattn/rng.hpp"
#include "swiftattn/selftest.hpp"
#include "test_util.hpp"

using namespace swiftattn;
using namespace swiftattn::attention;

namespace {

AdditiveAttentionParams<double> scalar_params(double a, double b, double w, double t,
                                              double tb, double o, double ob,
                                              bool normalize) {
  AdditiveAttentionParams<double> p;
  p.w_query = Tensor<double>({1, 1}, {a});
  p.w_key = Tensor<double>({1, 1}, {b});
  p.attn_vector = Tensor<double>({1}, {w});
  p.t_weight = Tensor<double>({1, 1}, {t});
  p.t_bias = Tensor<double>({1}, {tb});
  p.out_weight = Tensor<double>({1, 1}, {o});
  p.out_bias = Tensor<double>({1}, {ob});
  p.scale = 1.0;
  p.normalize_qk = normalize;
  return p;
}

}  // namespace

TEST_CASE("zero upstream gradient zeroes every gradient") {
  ParamRng rng(1);
  auto p = make_additive_params<double>(5, rng);
  Tensor<double> x({4, 5});
  rng.fill_unit(x);
  auto g = attn_additive_backward(x, p, Tensor<double>({4, 5}));
  for (const Tensor<double>* t :
       {&g.x, &g.w_query, &g.w_key, &g.attn_vector, &g.t_weight, &g.t_bias, &g.out_weight,
        &g.out_bias}) {
    for (double v : t->values()) CHECK(v == 0.0);
  }
}

TEST_CASE("scalar network matches the symbolic derivative, raw queries") {
  // n = d = 1 without normalization: y = o*(x*a + t*a*b*x^2 + tb) + ob.
  const double x0 = 0.7, a = 1.3, b = -0.8, w = 0.4, t = 0.9, tb = 0.2, o = 1.1, ob = -0.5;
  auto p = scalar_params(a, b, w, t, tb, o, ob, false);
  Tensor<double> x({1, 1}, {x0});
  Tensor<double> upstream({1, 1}, {1.0});

  Tensor<double> y = attn_additive(x, p);
  CHECK(y(0, 0) == doctest::Approx(o * (x0 * a + t * a * b * x0 * x0 + tb) + ob).epsilon(1e-14));

  auto g = attn_additive_backward(x, p, upstream);
  CHECK(g.x(0, 0) == doctest::Approx(o * (a + 2 * t * a * b * x0)).epsilon(1e-12));
  CHECK(g.w_query(0, 0) == doctest::Approx(o * (x0 + t * b * x0 * x0)).epsilon(1e-12));
  CHECK(g.w_key(0, 0) == doctest::Approx(o * t * a * x0 * x0).epsilon(1e-12));
  CHECK(g.attn_vector(0) == 0.0);  // softmax over one token is constant
  CHECK(g.t_weight(0, 0) == doctest::Approx(o * a * b * x0 * x0).epsilon(1e-12));
  CHECK(g.t_bias(0) == doctest::Approx(o).epsilon(1e-12));
  CHECK(g.out_weight(0, 0) ==
        doctest::Approx(x0 * a + t * a * b * x0 * x0 + tb).epsilon(1e-12));
  CHECK(g.out_bias(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("scalar network with normalization collapses to signs") {
  const double x0 = 0.7, a = 1.3, b = -0.8;
  const double t = 0.9, tb = 0.2, o = 1.1, ob = -0.5;
  auto p = scalar_params(a, b, 0.4, t, tb, o, ob, true);
  Tensor<double> x({1, 1}, {x0});
  Tensor<double> upstream({1, 1}, {1.0});

  const double q = x0 * a > 0 ? 1.0 : -1.0;  // 1
  const double k = x0 * b > 0 ? 1.0 : -1.0;  // -1
  Tensor<double> y = attn_additive(x, p);
  CHECK(y(0, 0) == doctest::Approx(o * (q + t * k * q + tb) + ob).epsilon(1e-12));

  auto g = attn_additive_backward(x, p, upstream);
  // Unit-normalized scalars are locally constant in their inputs.
  CHECK(g.x(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.w_query(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.w_key(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.attn_vector(0) == 0.0);
  CHECK(g.t_weight(0, 0) == doctest::Approx(o * k * q).epsilon(1e-12));
  CHECK(g.t_bias(0) == doctest::Approx(o).epsilon(1e-12));
  CHECK(g.out_weight(0, 0) == doctest::Approx(q + t * k * q + tb).epsilon(1e-12));
  CHECK(g.out_bias(0) == 1.0);
}

TEST_CASE("analytic backward matches central finite differences") {
  auto report = selftest::gradient_check(6, 6, 10, 42);
  CHECK(report.max_rel_error < 1e-4);
  CHECK(report.entries > 0);
}

TEST_CASE("finite differences also pass with normalization off and l2 alpha") {
  ParamRng rng(2);
  for (int mode = 0; mode < 2; ++mode) {
    const std::size_t n = 4, d = 6;
    auto p = make_additive_params<double>(d, rng);
    if (mode == 0) p.normalize_qk = false;
    if (mode == 1) p.alpha_norm = AlphaNorm::l2;
    Tensor<double> x({n, d});
    rng.fill_unit(x);
    Tensor<double> upstream({n, d});
    rng.fill_unit(upstream);

    auto analytic = attn_additive_backward(x, p, upstream);
    auto loss = [&] {
      Tensor<double> y = mode == 0 ? attn_additive(x, p) : attn_additive(x, p);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += upstream.data()[i] * y.data()[i];
      return acc;
    };
    const double h = 1e-6;
    double worst = 0;
    const std::pair<Tensor<double>*, const Tensor<double>*> slots[] = {
        {&x, &analytic.x},           {&p.w_query, &analytic.w_query},
        {&p.w_key, &analytic.w_key}, {&p.attn_vector, &analytic.attn_vector},
        {&p.t_weight, &analytic.t_weight}, {&p.out_weight, &analytic.out_weight},
    };
    for (const auto& [param, grad] : slots) {
      for (std::size_t i = 0; i < param->size(); ++i) {
        const double saved = param->data()[i];
        param->data()[i] = saved + h;
        const double up = loss();
        param->data()[i] = saved - h;
        const double down = loss();
        param->data()[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double aval = grad->data()[i];
        worst = std::max(worst, std::abs(aval - numeric) /
                                    std::max({std::abs(aval), std::abs(numeric), 1e-6}));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("upstream shape is validated") {
  ParamRng rng(3);
  auto p = make_additive_params<double>(4, rng);
  Tensor<double> x({3, 4});
  CHECK_THROWS_AS(attn_additive_backward(x, p, Tensor<double>({2, 4})), ShapeError);
}

TEST_CASE("smooth baselines: finite differences agree across step sizes") {
  // The three comparison variants have no analytic backward; a two-step
  // Richardson consistency check guards their differentiability instead.
  ParamRng rng(4);
  const std::size_t n = 4, d = 4;
  Tensor<double> x({n, d});
  rng.fill_unit(x);
  Tensor<double> weights({n, d});
  rng.fill_unit(weights);

  auto dense = make_dense_attention_params<double>(d, 1, rng);
  auto sep = make_separable_params<double>(d, rng);
  auto probe = [&](auto&& forward) {
    auto loss = [&](const Tensor<double>& input) {
      Tensor<double> y = forward(input);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += weights.data()[i] * y.data()[i];
      return acc;
    };
    double worst = 0;
    Tensor<double> probe_x = x;
    for (std::size_t i = 0; i < probe_x.size(); ++i) {
      const double saved = probe_x.data()[i];
      auto central = [&](double h) {
        probe_x.data()[i] = saved + h;
        const double up = loss(probe_x);
        probe_x.data()[i] = saved - h;
        const double down = loss(probe_x);
        probe_x.data()[i] = saved;
        return (up - down) / (2 * h);
      };
      const double coarse = central(1e-4);
      const double fine = central(5e-5);
      worst = std::max(worst, std::abs(coarse - fine) /
                                  std::max({std::abs(coarse), std::abs(fine), 1e-6}));
    }
    return worst;
  };

  CHECK(probe([&](const Tensor<double>& in) { return attn_standard(in, dense); }) < 1e-5);
  CHECK(probe([&](const Tensor<double>& in) { return attn_transpose(in, dense); }) < 1e-5);
  CHECK(probe([&](const Tensor<double>& in) { return attn_separable(in, sep); }) < 1e-5);
}
