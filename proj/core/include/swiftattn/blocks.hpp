// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "swiftattn/attention.hpp"
#include "swiftattn/nnops.hpp"
#include "swiftattn/rng.hpp"
#include "swiftattn/tensor.hpp"

namespace swiftattn::blocks {

enum class BlockKind { conv_encoder, swiftformer_encoder, downsample, patch_embed };

/// Declarative description of one block. Encoders preserve their channel
/// count; patch embedding and downsampling may change it.
struct BlockSpec {
  BlockKind kind = BlockKind::conv_encoder;
  std::size_t channels_in = 0;
  std::size_t channels_out = 0;
  std::size_t expansion_ratio = 4;

  void validate() const {
    if (channels_in == 0 || channels_out == 0) {
      throw ShapeError("block: channel counts must be positive");
    }
    if (expansion_ratio == 0) {
      throw ShapeError("block: expansion ratio must be >= 1");
    }
    const bool encoder =
        kind == BlockKind::conv_encoder || kind == BlockKind::swiftformer_encoder;
    if (encoder && channels_in != channels_out) {
      throw ShapeError("block: encoders must preserve channels, got " +
                       std::to_string(channels_in) + " -> " + std::to_string(channels_out));
    }
  }
};

/// A convolution with an optional trailing batch norm. fold() absorbs the
/// norm into the convolution for inference-time benchmarking.
template <class T>
struct ConvBn {
  nn::Conv2dParams<T> conv;
  std::optional<nn::BatchNormParams<T>> bn;

  Tensor<T> apply(const Tensor<T>& x) const {
    Tensor<T> y = nn::conv2d(x, conv);
    if (bn) y = nn::batchnorm_infer(y, *bn);
    return y;
  }

  void fold() {
    if (bn) {
      conv = nn::fold_bn_into_conv(conv, *bn);
      bn.reset();
    }
  }
};

/// Stem: two stride-2 3x3 convolutions, each conv-BN-GeLU, reducing the
/// resolution by four.
template <class T>
struct PatchEmbedParams {
  ConvBn<T> reduce1;
  ConvBn<T> reduce2;
};

/// Local mixing block: depth-wise 3x3 + BN, pointwise expansion with GeLU,
/// pointwise projection back, all wrapped in one residual.
template <class T>
struct ConvEncoderParams {
  ConvBn<T> dw;
  nn::Conv2dParams<T> expand;
  nn::Conv2dParams<T> project;
};

/// Local-global block: a conv local stage (no residual of its own), additive
/// attention over the flattened tokens with a residual, then a BN-conv-GeLU-
/// conv linear stage with a second residual.
template <class T>
struct SwiftEncoderParams {
  ConvBn<T> local_dw;
  nn::Conv2dParams<T> local_pw;
  attention::AdditiveAttentionParams<T> attn;
  nn::BatchNormParams<T> mlp_bn;
  nn::Conv2dParams<T> mlp_expand;
  nn::Conv2dParams<T> mlp_project;
};

template <class T>
struct DownsampleParams {
  ConvBn<T> conv;
};

// ---------------------------------------------------------------------------
// Token layout: row-major over (H, W), one token per pixel, features are
// channels. Attention is permutation equivariant, so the order only matters
// for bit reproducibility.
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> flatten_tokens(const Tensor<T>& fmap) {
  if (fmap.rank() != 3) {
    throw ShapeError("flatten_tokens: expected C x H x W, got " +
                     shape_to_string(fmap.shape()));
  }
  const std::size_t c = fmap.extent(0), h = fmap.extent(1), w = fmap.extent(2);
  Tensor<T> tokens({h * w, c});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) tokens(y * w + x, ch) = fmap(ch, y, x);
  return tokens;
}

template <class T>
Tensor<T> unflatten_tokens(const Tensor<T>& tokens, std::size_t c, std::size_t h,
                           std::size_t w) {
  if (tokens.rank() != 2 || tokens.extent(0) != h * w || tokens.extent(1) != c) {
    throw ShapeError("unflatten_tokens: token matrix " + shape_to_string(tokens.shape()) +
                     " does not hold " + std::to_string(h * w) + " tokens of width " +
                     std::to_string(c));
  }
  Tensor<T> fmap({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) fmap(ch, y, x) = tokens(y * w + x, ch);
  return fmap;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> patch_embed(const Tensor<T>& img, const PatchEmbedParams<T>& p) {
  if (img.rank() != 3 || img.extent(1) % 4 != 0 || img.extent(2) % 4 != 0) {
    throw ShapeError("patch_embed: spatial dims of " + shape_to_string(img.shape()) +
                     " must divide by 4");
  }
  Tensor<T> y = nn::gelu(p.reduce1.apply(img));
  return nn::gelu(p.reduce2.apply(y));
}

template <class T>
Tensor<T> conv_encoder(const Tensor<T>& x, const ConvEncoderParams<T>& p) {
  Tensor<T> y = p.dw.apply(x);
  y = nn::gelu(nn::conv2d(y, p.expand));
  y = nn::conv2d(y, p.project);
  return add(y, x);
}

template <class T>
Tensor<T> swiftformer_encoder(const Tensor<T>& x, const SwiftEncoderParams<T>& p,
                              attention::AdditiveTrace<T>* trace = nullptr) {
  Tensor<T> local = nn::conv2d(p.local_dw.apply(x), p.local_pw);

  const std::size_t c = local.extent(0), h = local.extent(1), w = local.extent(2);
  Tensor<T> tokens = flatten_tokens(local);
  Tensor<T> attended = attention::attn_additive(tokens, p.attn, trace);
  Tensor<T> mixed = unflatten_tokens(add(attended, tokens), c, h, w);

  Tensor<T> y = nn::batchnorm_infer(mixed, p.mlp_bn);
  y = nn::gelu(nn::conv2d(y, p.mlp_expand));
  y = nn::conv2d(y, p.mlp_project);
  return add(y, mixed);
}

template <class T>
Tensor<T> downsample(const Tensor<T>& x, const DownsampleParams<T>& p) {
  if (x.rank() != 3 || x.extent(1) % 2 != 0 || x.extent(2) % 2 != 0) {
    throw ShapeError("downsample: spatial dims of " + shape_to_string(x.shape()) +
                     " must be even");
  }
  return p.conv.apply(x);
}

// ---------------------------------------------------------------------------
// Seeded factories. Convolutions feeding a batch norm carry no bias; all
// other convolutions do. Batch norms start at identity statistics.
// ---------------------------------------------------------------------------

template <class T>
ConvBn<T> make_conv_bn(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                       std::size_t padding, std::size_t groups, ParamRng& rng) {
  ConvBn<T> cb;
  cb.conv.in_channels = in;
  cb.conv.out_channels = out;
  cb.conv.kernel = kernel;
  cb.conv.stride = stride;
  cb.conv.padding = padding;
  cb.conv.groups = groups;
  cb.conv.weights = Tensor<T>({out, in / groups, kernel, kernel});
  rng.fill_fan_in(cb.conv.weights, (in / groups) * kernel * kernel);
  cb.bn = nn::BatchNormParams<T>::identity(out);
  return cb;
}

template <class T>
nn::Conv2dParams<T> make_pointwise(std::size_t in, std::size_t out, ParamRng& rng) {
  nn::Conv2dParams<T> c;
  c.in_channels = in;
  c.out_channels = out;
  c.kernel = 1;
  c.weights = Tensor<T>({out, in, 1, 1});
  Tensor<T> bias({out});
  rng.fill_fan_in(c.weights, in);
  rng.fill_fan_in(bias, in);
  c.bias = std::move(bias);
  return c;
}

template <class T>
PatchEmbedParams<T> make_patch_embed(std::size_t in, std::size_t mid, std::size_t out,
                                     ParamRng& rng) {
  PatchEmbedParams<T> p;
  p.reduce1 = make_conv_bn<T>(in, mid, 3, 2, 1, 1, rng);
  p.reduce2 = make_conv_bn<T>(mid, out, 3, 2, 1, 1, rng);
  return p;
}

template <class T>
ConvEncoderParams<T> make_conv_encoder(const BlockSpec& spec, ParamRng& rng) {
  spec.validate();
  const std::size_t c = spec.channels_in;
  const std::size_t hidden = c * spec.expansion_ratio;
  ConvEncoderParams<T> p;
  p.dw = make_conv_bn<T>(c, c, 3, 1, 1, c, rng);
  p.expand = make_pointwise<T>(c, hidden, rng);
  p.project = make_pointwise<T>(hidden, c, rng);
  return p;
}

template <class T>
SwiftEncoderParams<T> make_swift_encoder(const BlockSpec& spec, ParamRng& rng) {
  spec.validate();
  const std::size_t c = spec.channels_in;
  const std::size_t hidden = c * spec.expansion_ratio;
  SwiftEncoderParams<T> p;
  p.local_dw = make_conv_bn<T>(c, c, 3, 1, 1, c, rng);
  p.local_pw = make_pointwise<T>(c, c, rng);
  p.attn = attention::make_additive_params<T>(c, rng);
  p.mlp_bn = nn::BatchNormParams<T>::identity(c);
  p.mlp_expand = make_pointwise<T>(c, hidden, rng);
  p.mlp_project = make_pointwise<T>(hidden, c, rng);
  return p;
}

template <class T>
DownsampleParams<T> make_downsample(const BlockSpec& spec, ParamRng& rng) {
  spec.validate();
  DownsampleParams<T> p;
  p.conv = make_conv_bn<T>(spec.channels_in, spec.channels_out, 3, 2, 1, 1, rng);
  return p;
}

}  // namespace swiftattn::blocks
