// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "swiftattn/tensor.hpp"

namespace swiftattn::nn {

/// 2D convolution parameters. Feature maps are C x H x W, weights are
/// out x (in/groups) x k x k. groups == 1 is a dense convolution,
/// groups == in_channels a depth-wise one.
template <class T>
struct Conv2dParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
  Tensor<T> weights;
  std::optional<Tensor<T>> bias;

  void validate() const {
    if (groups == 0 || in_channels % groups != 0 || out_channels % groups != 0) {
      throw ShapeError("conv2d: channels (" + std::to_string(in_channels) + " -> " +
                       std::to_string(out_channels) + ") not divisible by groups " +
                       std::to_string(groups));
    }
    const std::vector<std::size_t> expect{out_channels, in_channels / groups, kernel, kernel};
    if (weights.shape() != expect) {
      throw ShapeError("conv2d: weight shape " + shape_to_string(weights.shape()) +
                       " does not match " + shape_to_string(expect));
    }
    if (bias && bias->shape() != std::vector<std::size_t>{out_channels}) {
      throw ShapeError("conv2d: bias shape " + shape_to_string(bias->shape()) +
                       " does not match out_channels " + std::to_string(out_channels));
    }
  }
};

/// Inference-mode batch normalization: running statistics only.
template <class T>
struct BatchNormParams {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T eps = T(1e-5);

  std::size_t channels() const { return gamma.extent(0); }

  void validate() const {
    if (gamma.rank() != 1 || !gamma.same_shape(beta) || !gamma.same_shape(running_mean) ||
        !gamma.same_shape(running_var)) {
      throw ShapeError("batchnorm: gamma/beta/mean/var must share one rank-1 shape, got " +
                       shape_to_string(gamma.shape()) + ", " + shape_to_string(beta.shape()) +
                       ", " + shape_to_string(running_mean.shape()) + ", " +
                       shape_to_string(running_var.shape()));
    }
  }

  /// Identity statistics: gamma=1, beta=0, mean=0, var=1.
  static BatchNormParams identity(std::size_t channels, T eps = T(1e-5)) {
    BatchNormParams p;
    p.gamma = Tensor<T>::full({channels}, T(1));
    p.beta = Tensor<T>({channels});
    p.running_mean = Tensor<T>({channels});
    p.running_var = Tensor<T>::full({channels}, T(1));
    p.eps = eps;
    return p;
  }
};

namespace detail {

struct ConvGeometry {
  std::size_t out_h = 0, out_w = 0;
};

template <class T>
ConvGeometry conv_geometry(const Tensor<T>& x, const Conv2dParams<T>& p) {
  p.validate();
  if (x.rank() != 3 || x.extent(0) != p.in_channels) {
    throw ShapeError("conv2d: input " + shape_to_string(x.shape()) + " does not provide " +
                     std::to_string(p.in_channels) + " channels");
  }
  const std::size_t h = x.extent(1), w = x.extent(2);
  if (h + 2 * p.padding < p.kernel || w + 2 * p.padding < p.kernel) {
    throw ShapeError("conv2d: kernel " + std::to_string(p.kernel) + " exceeds padded input " +
                     shape_to_string(x.shape()));
  }
  ConvGeometry g;
  g.out_h = (h + 2 * p.padding - p.kernel) / p.stride + 1;
  g.out_w = (w + 2 * p.padding - p.kernel) / p.stride + 1;
  if (g.out_h == 0 || g.out_w == 0) {
    throw ShapeError("conv2d: empty output extent for input " + shape_to_string(x.shape()));
  }
  return g;
}

}  // namespace detail

/// Cross-correlation over zero-padded input, plain loops.
template <class T>
Tensor<T> conv2d_direct(const Tensor<T>& x, const Conv2dParams<T>& p) {
  const auto g = detail::conv_geometry(x, p);
  const std::size_t h = x.extent(1), w = x.extent(2);
  const std::size_t in_per_group = p.in_channels / p.groups;
  const std::size_t out_per_group = p.out_channels / p.groups;
  const std::size_t k = p.kernel;

  Tensor<T> out({p.out_channels, g.out_h, g.out_w});
  const T* xd = x.data();
  const T* wd = p.weights.data();
  T* od = out.data();

  for (std::size_t grp = 0; grp < p.groups; ++grp) {
    for (std::size_t ocg = 0; ocg < out_per_group; ++ocg) {
      const std::size_t oc = grp * out_per_group + ocg;
      const T bias = p.bias ? (*p.bias)(oc) : T(0);
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T acc = bias;
          for (std::size_t icg = 0; icg < in_per_group; ++icg) {
            const std::size_t ic = grp * in_per_group + icg;
            const T* xplane = xd + ic * h * w;
            const T* wplane = wd + (oc * in_per_group + icg) * k * k;
            for (std::size_t ky = 0; ky < k; ++ky) {
              const std::ptrdiff_t iy =
                  std::ptrdiff_t(oy * p.stride + ky) - std::ptrdiff_t(p.padding);
              if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix =
                    std::ptrdiff_t(ox * p.stride + kx) - std::ptrdiff_t(p.padding);
                if (ix < 0 || ix >= std::ptrdiff_t(w)) continue;
                acc += xplane[iy * std::ptrdiff_t(w) + ix] * wplane[ky * k + kx];
              }
            }
          }
          od[(oc * g.out_h + oy) * g.out_w + ox] = acc;
        }
      }
    }
  }
  return out;
}

/// im2col + matmul path. 1x1 stride-1 unpadded dense convolutions skip the
/// column buffer entirely and run as a single matmul over pixels.
template <class T>
Tensor<T> conv2d_im2col(const Tensor<T>& x, const Conv2dParams<T>& p) {
  const auto g = detail::conv_geometry(x, p);
  const std::size_t h = x.extent(1), w = x.extent(2);
  const std::size_t k = p.kernel;
  const std::size_t in_per_group = p.in_channels / p.groups;
  const std::size_t out_per_group = p.out_channels / p.groups;
  const std::size_t pixels = g.out_h * g.out_w;

  if (k == 1 && p.stride == 1 && p.padding == 0 && p.groups == 1) {
    Tensor<T> wmat({p.out_channels, p.in_channels}, std::vector<T>(p.weights.values().begin(),
                                                                   p.weights.values().end()));
    Tensor<T> xmat({p.in_channels, pixels},
                   std::vector<T>(x.values().begin(), x.values().end()));
    Tensor<T> prod = matmul(wmat, xmat);
    Tensor<T> out({p.out_channels, g.out_h, g.out_w}, std::vector<T>(prod.values().begin(),
                                                                     prod.values().end()));
    if (p.bias) {
      T* od = out.data();
      for (std::size_t oc = 0; oc < p.out_channels; ++oc) {
        const T b = (*p.bias)(oc);
        for (std::size_t i = 0; i < pixels; ++i) od[oc * pixels + i] += b;
      }
    }
    return out;
  }

  Tensor<T> out({p.out_channels, g.out_h, g.out_w});
  T* od = out.data();
  const T* xd = x.data();
  const T* wd = p.weights.data();
  const std::size_t patch = in_per_group * k * k;

  Tensor<T> col({patch, pixels});
  for (std::size_t grp = 0; grp < p.groups; ++grp) {
    T* cd = col.data();
    std::fill(cd, cd + col.size(), T(0));
    for (std::size_t icg = 0; icg < in_per_group; ++icg) {
      const T* xplane = xd + (grp * in_per_group + icg) * h * w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          T* crow = cd + ((icg * k + ky) * k + kx) * pixels;
          for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            const std::ptrdiff_t iy =
                std::ptrdiff_t(oy * p.stride + ky) - std::ptrdiff_t(p.padding);
            if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
              const std::ptrdiff_t ix =
                  std::ptrdiff_t(ox * p.stride + kx) - std::ptrdiff_t(p.padding);
              if (ix < 0 || ix >= std::ptrdiff_t(w)) continue;
              crow[oy * g.out_w + ox] = xplane[iy * std::ptrdiff_t(w) + ix];
            }
          }
        }
      }
    }
    Tensor<T> wmat({out_per_group, patch});
    std::copy(wd + grp * out_per_group * patch, wd + (grp + 1) * out_per_group * patch,
              wmat.data());
    Tensor<T> prod = matmul(wmat, col);
    const T* pd = prod.data();
    for (std::size_t ocg = 0; ocg < out_per_group; ++ocg) {
      const std::size_t oc = grp * out_per_group + ocg;
      const T b = p.bias ? (*p.bias)(oc) : T(0);
      for (std::size_t i = 0; i < pixels; ++i) od[oc * pixels + i] = pd[ocg * pixels + i] + b;
    }
  }
  return out;
}

/// Production path: matmul-backed for dense convolutions, direct loops for
/// grouped/depth-wise ones where the column buffer buys nothing.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Conv2dParams<T>& p) {
  if (p.groups == 1) return conv2d_im2col(x, p);
  return conv2d_direct(x, p);
}

template <class T>
Tensor<T> batchnorm_infer(const Tensor<T>& x, const BatchNormParams<T>& p) {
  p.validate();
  if (x.rank() != 3 || x.extent(0) != p.channels()) {
    throw ShapeError("batchnorm: input " + shape_to_string(x.shape()) + " does not provide " +
                     std::to_string(p.channels()) + " channels");
  }
  const std::size_t c = p.channels(), plane = x.extent(1) * x.extent(2);
  Tensor<T> out(x.shape());
  const T* xd = x.data();
  T* od = out.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T inv_std = T(1) / std::sqrt(p.running_var(ch) + p.eps);
    const T s = p.gamma(ch) * inv_std;
    const T b = p.beta(ch) - p.running_mean(ch) * s;
    for (std::size_t i = 0; i < plane; ++i) od[ch * plane + i] = xd[ch * plane + i] * s + b;
  }
  return out;
}

/// Absorbs inference-mode batch norm into the preceding convolution:
/// fold(conv, bn)(x) == bn(conv(x)) for every x, up to rounding.
template <class T>
Conv2dParams<T> fold_bn_into_conv(const Conv2dParams<T>& conv, const BatchNormParams<T>& bn) {
  conv.validate();
  bn.validate();
  if (bn.channels() != conv.out_channels) {
    throw ShapeError("fold_bn_into_conv: batchnorm channels " + std::to_string(bn.channels()) +
                     " do not match conv out_channels " + std::to_string(conv.out_channels));
  }
  Conv2dParams<T> fused = conv;
  Tensor<T> bias({conv.out_channels});
  const std::size_t per_filter = conv.weights.size() / conv.out_channels;
  T* wd = fused.weights.data();
  for (std::size_t oc = 0; oc < conv.out_channels; ++oc) {
    const T s = bn.gamma(oc) / std::sqrt(bn.running_var(oc) + bn.eps);
    for (std::size_t i = 0; i < per_filter; ++i) wd[oc * per_filter + i] *= s;
    const T b0 = conv.bias ? (*conv.bias)(oc) : T(0);
    bias(oc) = (b0 - bn.running_mean(oc)) * s + bn.beta(oc);
  }
  fused.bias = std::move(bias);
  return fused;
}

/// tanh-approximation GeLU. Deviates from the exact erf form by at most 1e-3.
template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T k0 = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T k1 = T(0.044715);
  Tensor<T> out(x.shape());
  const T* xd = x.data();
  T* od = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = xd[i];
    od[i] = T(0.5) * v * (T(1) + std::tanh(k0 * (v + k1 * v * v * v)));
  }
  return out;
}

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  if (x.rank() != 3) {
    throw ShapeError("global_avg_pool: expected C x H x W input, got " +
                     shape_to_string(x.shape()));
  }
  const std::size_t c = x.extent(0), plane = x.extent(1) * x.extent(2);
  Tensor<T> out({c});
  const T* xd = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    T acc = T(0);
    for (std::size_t i = 0; i < plane; ++i) acc += xd[ch * plane + i];
    out(ch) = acc / T(plane);
  }
  return out;
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight) {
  return matmul(x, weight);
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  return add(matmul(x, weight), bias);
}

template <class T>
struct LinearParams {
  Tensor<T> weight;  // d_in x d_out
  std::optional<Tensor<T>> bias;
};

template <class T>
Tensor<T> linear(const Tensor<T>& x, const LinearParams<T>& p) {
  return p.bias ? linear(x, p.weight, *p.bias) : linear(x, p.weight);
}

}  // namespace swiftattn::nn
