// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace swiftattn {

/// Raised when operand shapes are incompatible. The message always carries
/// the offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

template <class T>
struct dtype_traits;

template <>
struct dtype_traits<float> {
  static constexpr Dtype tag = Dtype::f32;
  static constexpr float norm_eps = 1e-6f;
};

template <>
struct dtype_traits<double> {
  static constexpr Dtype tag = Dtype::f64;
  static constexpr double norm_eps = 1e-12;
};

inline std::string shape_to_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

struct AllocationStats {
  std::size_t allocations = 0;    // number of buffers created
  std::size_t peak_elements = 0;  // largest single buffer, in elements
};

namespace detail {
AllocationStats*& allocation_probe_slot();
inline void record_allocation(std::size_t elements) {
  if (AllocationStats* stats = allocation_probe_slot()) {
    stats->allocations += 1;
    stats->peak_elements = std::max(stats->peak_elements, elements);
  }
}
}  // namespace detail

/// Test hook: while alive, records every tensor buffer created on the
/// current thread. Used to assert memory-scaling properties of kernels.
class AllocationProbe {
 public:
  AllocationProbe() { detail::allocation_probe_slot() = &stats_; }
  ~AllocationProbe() { detail::allocation_probe_slot() = nullptr; }
  AllocationProbe(const AllocationProbe&) = delete;
  AllocationProbe& operator=(const AllocationProbe&) = delete;

  const AllocationStats& stats() const { return stats_; }

 private:
  AllocationStats stats_;
};

/// Dense row-major array with explicit shape, rank 1 to 4. Immutable by
/// convention once built: kernels take const refs and return fresh tensors.
/// Precision is part of the type; float and double tensors never mix.
template <class T>
class Tensor {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "tensors come in exactly two precisions: float and double");

 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_)) {
    detail::record_allocation(data_.size());
  }

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size()) {
      throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
    detail::record_allocation(data_.size());
  }

  Tensor(const Tensor& other) : shape_(other.shape_), data_(other.data_) {
    detail::record_allocation(data_.size());
  }
  Tensor& operator=(const Tensor& other) {
    if (this != &other) {
      shape_ = other.shape_;
      data_ = other.data_;
      detail::record_allocation(data_.size());
    }
    return *this;
  }
  Tensor(Tensor&&) noexcept = default;
  Tensor& operator=(Tensor&&) noexcept = default;

  static Tensor full(std::vector<std::size_t> shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return {data_.data(), data_.size()}; }
  std::span<const T> values() const { return {data_.data(), data_.size()}; }

  T& operator()(std::size_t i) { return data_[i]; }
  T operator()(std::size_t i) const { return data_[i]; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  T operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  T operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    if (shape.empty() || shape.size() > 4) {
      throw ShapeError("tensor: rank must be 1..4, got shape " + shape_to_string(shape));
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
      if (e == 0) {
        throw ShapeError("tensor: all extents must be >= 1, got shape " +
                         shape_to_string(shape));
      }
      n *= e;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

template <class T>
Tensor<T> zeros_like(const Tensor<T>& t) {
  return Tensor<T>(t.shape());
}

// ---------------------------------------------------------------------------
// Bulk operations. All are pure: operands are never mutated.
// ---------------------------------------------------------------------------

/// c[i][j] = sum_k a[i][k] * b[k][j]. Accumulation runs in increasing k so the
/// result matches a plain triple loop bit for bit.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw ShapeError("matmul: incompatible operands " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), p = b.extent(1);
  Tensor<T> c({m, p});
  const T* ad = a.data();
  const T* bd = b.data();
  T* cd = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = cd + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      const T ail = ad[i * k + l];
      const T* brow = bd + l * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += ail * brow[j];
    }
  }
  return c;
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2) {
    throw ShapeError("transpose: expected rank-2 tensor, got " +
                     shape_to_string(a.shape()));
  }
  const std::size_t m = a.extent(0), n = a.extent(1);
  Tensor<T> t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t(j, i) = a(i, j);
  return t;
}

/// Softmax along one axis with unconditional max-subtraction, so large logits
/// (they scale with the embedding dim) never overflow.
template <class T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(x.shape()));
  }
  const auto& shape = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];

  Tensor<T> out(shape);
  const T* xd = x.data();
  T* od = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      T peak = xd[base];
      for (std::size_t l = 1; l < len; ++l) peak = std::max(peak, xd[base + l * inner]);
      T total = T(0);
      for (std::size_t l = 0; l < len; ++l) {
        const T e = std::exp(xd[base + l * inner] - peak);
        od[base + l * inner] = e;
        total += e;
      }
      const T inv = T(1) / total;
      for (std::size_t l = 0; l < len; ++l) od[base + l * inner] *= inv;
    }
  }
  return out;
}

namespace detail {

enum class BinaryKind { add, sub, mul };

template <class T, BinaryKind Kind>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b) {
  auto apply = [](T x, T y) {
    if constexpr (Kind == BinaryKind::add) return x + y;
    if constexpr (Kind == BinaryKind::sub) return x - y;
    if constexpr (Kind == BinaryKind::mul) return x * y;
  };
  Tensor<T> out(a.shape());
  const T* ad = a.data();
  T* od = out.data();
  if (a.same_shape(b)) {
    const T* bd = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) od[i] = apply(ad[i], bd[i]);
    return out;
  }
  // Rank-1 rhs broadcast along the leading axis: every row of a meets b.
  if (b.rank() == 1 && a.rank() == 2 && b.extent(0) == a.extent(1)) {
    const std::size_t rows = a.extent(0), cols = a.extent(1);
    const T* bd = b.data();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        od[i * cols + j] = apply(ad[i * cols + j], bd[j]);
    return out;
  }
  throw ShapeError("elementwise: incompatible shapes " + shape_to_string(a.shape()) +
                   " and " + shape_to_string(b.shape()));
}

template <class T, BinaryKind Kind>
Tensor<T> binary_scalar(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  const T* ad = a.data();
  T* od = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if constexpr (Kind == BinaryKind::add) od[i] = ad[i] + s;
    if constexpr (Kind == BinaryKind::sub) od[i] = ad[i] - s;
    if constexpr (Kind == BinaryKind::mul) od[i] = ad[i] * s;
  }
  return out;
}

}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary<T, detail::BinaryKind::add>(a, b);
}
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary<T, detail::BinaryKind::sub>(a, b);
}
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary<T, detail::BinaryKind::mul>(a, b);
}
template <class T>
Tensor<T> add(const Tensor<T>& a, T s) {
  return detail::binary_scalar<T, detail::BinaryKind::add>(a, s);
}
template <class T>
Tensor<T> sub(const Tensor<T>& a, T s) {
  return detail::binary_scalar<T, detail::BinaryKind::sub>(a, s);
}
template <class T>
Tensor<T> mul(const Tensor<T>& a, T s) {
  return detail::binary_scalar<T, detail::BinaryKind::mul>(a, s);
}
template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return mul(a, s);
}

/// Divides each row of a rank-2 tensor by max(row L2 norm, eps). Rows whose
/// norm falls below eps are scaled by 1/eps, so exact zero rows stay zero.
template <class T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps = dtype_traits<T>::norm_eps) {
  if (x.rank() != 2) {
    throw ShapeError("l2_normalize_rows: expected rank-2 tensor, got " +
                     shape_to_string(x.shape()));
  }
  const std::size_t rows = x.extent(0), cols = x.extent(1);
  Tensor<T> out(x.shape());
  const T* xd = x.data();
  T* od = out.data();
  for (std::size_t i = 0; i < rows; ++i) {
    T sq = T(0);
    for (std::size_t j = 0; j < cols; ++j) {
      const T v = xd[i * cols + j];
      sq += v * v;
    }
    const T inv = T(1) / std::max(std::sqrt(sq), eps);
    for (std::size_t j = 0; j < cols; ++j) od[i * cols + j] = xd[i * cols + j] * inv;
  }
  return out;
}

}  // namespace swiftattn
