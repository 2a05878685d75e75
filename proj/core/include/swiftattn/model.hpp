// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swiftattn/blocks.hpp"
#include "swiftattn/model_spec.hpp"
#include "swiftattn/weights_io.hpp"

namespace swiftattn::models {

/// Per-forward introspection: what every attention call saw, and the feature
/// map shape after every stage.
struct ForwardTrace {
  struct AttentionCall {
    std::size_t stage = 0;
    std::size_t tokens = 0;
    std::size_t dim = 0;
    double alpha_sum = 0;
  };
  std::vector<AttentionCall> attention_calls;
  std::vector<std::array<std::size_t, 3>> stage_shapes;
};

/// A built SwiftFormer variant. Immutable after construction; forward passes
/// on one model are safe to run concurrently.
template <class T>
class Model {
 public:
  /// Deterministic: one seed, one bit pattern. Weights are fan-in uniform,
  /// batch norms start at identity statistics.
  static Model build(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    ParamRng rng(seed);
    m.stem_ = blocks::make_patch_embed<T>(3, spec.stem_dims[0], spec.stem_dims[1], rng);
    for (std::size_t s = 0; s < 4; ++s) {
      const std::size_t dim = spec.stages[s].dim;
      blocks::BlockSpec conv_spec{blocks::BlockKind::conv_encoder, dim, dim, spec.expansion};
      blocks::BlockSpec swift_spec{blocks::BlockKind::swiftformer_encoder, dim, dim,
                                   spec.expansion};
      for (std::size_t b = 0; b < spec.stages[s].conv_blocks; ++b) {
        m.stages_[s].conv_blocks.push_back(blocks::make_conv_encoder<T>(conv_spec, rng));
      }
      m.stages_[s].swift = blocks::make_swift_encoder<T>(swift_spec, rng);
      if (s + 1 < 4) {
        blocks::BlockSpec down{blocks::BlockKind::downsample, dim, spec.stages[s + 1].dim,
                               spec.expansion};
        m.downsamples_[s] = blocks::make_downsample<T>(down, rng);
      }
    }
    const std::size_t last = spec.stages[3].dim;
    m.head_ = make_head(last, spec.num_classes, rng);
    if (spec.head == HeadMode::dual) {
      m.head_dist_ = make_head(last, spec.num_classes, rng);
    }
    return m;
  }

  const ModelSpec& spec() const { return spec_; }
  bool fused() const { return fused_; }

  /// Stem, four stages with downsampling between, pooling, linear head.
  /// Dual-head models average the two logit vectors.
  Tensor<T> forward(const Tensor<T>& image, ForwardTrace* trace = nullptr) const {
    if (image.rank() != 3 || image.extent(0) != 3 || image.extent(1) % 32 != 0 ||
        image.extent(2) % 32 != 0) {
      throw ShapeError("forward: expected 3 x H x W input with H, W divisible by 32, got " +
                       shape_to_string(image.shape()));
    }
    Tensor<T> x = blocks::patch_embed(image, stem_);
    for (std::size_t s = 0; s < 4; ++s) {
      for (const auto& conv : stages_[s].conv_blocks) x = blocks::conv_encoder(x, conv);
      attention::AdditiveTrace<T> attn_trace;
      x = blocks::swiftformer_encoder(x, stages_[s].swift,
                                      trace ? &attn_trace : nullptr);
      if (trace) {
        double alpha_sum = 0;
        for (std::size_t i = 0; i < attn_trace.alpha.size(); ++i)
          alpha_sum += double(attn_trace.alpha(i));
        trace->attention_calls.push_back(
            {s + 1, attn_trace.alpha.size(), attn_trace.global_query.size(), alpha_sum});
        trace->stage_shapes.push_back({x.extent(0), x.extent(1), x.extent(2)});
      }
      if (s + 1 < 4) x = blocks::downsample(x, downsamples_[s]);
    }
    Tensor<T> pooled = nn::global_avg_pool(x);
    Tensor<T> row({1, pooled.size()},
                  std::vector<T>(pooled.values().begin(), pooled.values().end()));
    Tensor<T> logits = nn::linear(row, head_);
    if (head_dist_) {
      Tensor<T> dist = nn::linear(row, *head_dist_);
      logits = mul(add(logits, dist), T(0.5));
    }
    Tensor<T> out({spec_.num_classes});
    std::copy(logits.values().begin(), logits.values().end(), out.data());
    return out;
  }

  /// Copy with every post-convolution batch norm folded into its convolution.
  /// The linear block's pre-convolution norm stays as is.
  Model fuse_batchnorm() const {
    Model m = *this;
    m.stem_.reduce1.fold();
    m.stem_.reduce2.fold();
    for (auto& stage : m.stages_) {
      for (auto& conv : stage.conv_blocks) conv.dw.fold();
      stage.swift.local_dw.fold();
    }
    for (auto& down : m.downsamples_) down.conv.fold();
    m.fused_ = true;
    return m;
  }

  template <class F>
  void visit_params(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit_params(F&& f) const {
    visit_impl(*this, f);
  }

  /// Snapshot of every parameter in canonical traversal order.
  WeightBundle<T> weights() const {
    WeightBundle<T> bundle;
    visit_params([&](const std::string& name, const Tensor<T>& t) { bundle.add(name, t); });
    return bundle;
  }

  /// Strict by-name load: the bundle must carry exactly this model's
  /// parameters with matching shapes. The first offending name is reported.
  void load_weights(const WeightBundle<T>& bundle) {
    std::vector<std::pair<std::string, Tensor<T>*>> slots;
    visit_params([&](const std::string& name, Tensor<T>& t) { slots.emplace_back(name, &t); });
    for (auto& [name, slot] : slots) {
      const Tensor<T>* src = bundle.find(name);
      if (!src) {
        throw IoError("weights: bundle is missing parameter '" + name + "'");
      }
      if (src->shape() != slot->shape()) {
        throw IoError("weights: parameter '" + name + "' has shape " +
                      shape_to_string(src->shape()) + ", model expects " +
                      shape_to_string(slot->shape()));
      }
    }
    if (bundle.size() != slots.size()) {
      std::map<std::string, bool> expected;
      for (const auto& [name, _] : slots) expected[name] = true;
      for (const auto& [name, _] : bundle.entries()) {
        if (!expected.contains(name)) {
          throw IoError("weights: bundle carries unexpected parameter '" + name + "'");
        }
      }
    }
    for (auto& [name, slot] : slots) *slot = *bundle.find(name);
  }

 private:
  static nn::LinearParams<T> make_head(std::size_t in, std::size_t classes, ParamRng& rng) {
    nn::LinearParams<T> head;
    head.weight = Tensor<T>({in, classes});
    Tensor<T> bias({classes});
    rng.fill_fan_in(head.weight, in);
    rng.fill_fan_in(bias, in);
    head.bias = std::move(bias);
    return head;
  }

  template <class Self, class F>
  static void visit_conv(Self& conv, const std::string& prefix, F& f) {
    f(prefix + ".weight", conv.weights);
    if (conv.bias) f(prefix + ".bias", *conv.bias);
  }

  template <class Self, class F>
  static void visit_bn(Self& bn, const std::string& prefix, F& f) {
    f(prefix + ".gamma", bn.gamma);
    f(prefix + ".beta", bn.beta);
    f(prefix + ".running_mean", bn.running_mean);
    f(prefix + ".running_var", bn.running_var);
  }

  template <class Self, class F>
  static void visit_conv_bn(Self& cb, const std::string& prefix, F& f) {
    visit_conv(cb.conv, prefix + ".conv", f);
    if (cb.bn) visit_bn(*cb.bn, prefix + ".bn", f);
  }

  template <class Self, class F>
  static void visit_impl(Self& self, F& f) {
    visit_conv_bn(self.stem_.reduce1, "stem.reduce1", f);
    visit_conv_bn(self.stem_.reduce2, "stem.reduce2", f);
    for (std::size_t s = 0; s < 4; ++s) {
      const std::string stage = "stage" + std::to_string(s + 1);
      auto& st = self.stages_[s];
      for (std::size_t b = 0; b < st.conv_blocks.size(); ++b) {
        const std::string prefix = stage + ".conv" + std::to_string(b + 1);
        auto& blk = st.conv_blocks[b];
        visit_conv_bn(blk.dw, prefix + ".dw", f);
        visit_conv(blk.expand, prefix + ".expand", f);
        visit_conv(blk.project, prefix + ".project", f);
      }
      auto& sw = st.swift;
      visit_conv_bn(sw.local_dw, stage + ".swift.local_dw", f);
      visit_conv(sw.local_pw, stage + ".swift.local_pw", f);
      f(stage + ".swift.attn.w_query", sw.attn.w_query);
      f(stage + ".swift.attn.w_key", sw.attn.w_key);
      f(stage + ".swift.attn.attn_vector", sw.attn.attn_vector);
      f(stage + ".swift.attn.t_weight", sw.attn.t_weight);
      f(stage + ".swift.attn.t_bias", sw.attn.t_bias);
      f(stage + ".swift.attn.out_weight", sw.attn.out_weight);
      f(stage + ".swift.attn.out_bias", sw.attn.out_bias);
      visit_bn(sw.mlp_bn, stage + ".swift.mlp.bn", f);
      visit_conv(sw.mlp_expand, stage + ".swift.mlp.expand", f);
      visit_conv(sw.mlp_project, stage + ".swift.mlp.project", f);
      if (s + 1 < 4) {
        visit_conv_bn(self.downsamples_[s].conv, "down" + std::to_string(s + 1), f);
      }
    }
    f("head.weight", self.head_.weight);
    f("head.bias", *self.head_.bias);
    if (self.head_dist_) {
      f("head_dist.weight", self.head_dist_->weight);
      f("head_dist.bias", *self.head_dist_->bias);
    }
  }

  struct Stage {
    std::vector<blocks::ConvEncoderParams<T>> conv_blocks;
    blocks::SwiftEncoderParams<T> swift;
  };

  ModelSpec spec_;
  blocks::PatchEmbedParams<T> stem_;
  std::array<Stage, 4> stages_;
  std::array<blocks::DownsampleParams<T>, 3> downsamples_;
  nn::LinearParams<T> head_;
  std::optional<nn::LinearParams<T>> head_dist_;
  bool fused_ = false;
};

/// Exact parameter totals by component; running statistics count, since the
/// persisted bundle must reproduce inference bit for bit.
template <class T>
CountBreakdown param_count(const Model<T>& m) {
  std::vector<std::pair<std::string, std::uint64_t>> parts;
  m.visit_params([&](const std::string& name, const Tensor<T>& t) {
    const std::string component = name.substr(0, name.find('.'));
    if (parts.empty() || parts.back().first != component) {
      parts.emplace_back(component, 0);
    }
    parts.back().second += t.size();
  });
  CountBreakdown bd;
  bd.parts = std::move(parts);
  return bd;
}

}  // namespace swiftattn::models
