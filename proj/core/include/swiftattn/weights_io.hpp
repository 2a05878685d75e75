// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Weight file format, little-endian throughout:
//
//   magic "SWFT" | version u32 | spec-hash u64 | count u32
//   per parameter:
//     name length u16 | name bytes (UTF-8) | rank u8 | extents u32[rank]
//     | dtype u8 (0 = f32, 1 = f64) | raw payload
//   trailing CRC32 (IEEE, reflected) of every byte before it
//
// Round trips are bit exact. A truncated or corrupted file fails the CRC
// check before any bundle is materialized.

#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swiftattn/tensor.hpp"

namespace swiftattn::models {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Ordered parameter store: names are unique, order is the model's canonical
/// traversal order and survives persistence.
template <class T>
class WeightBundle {
 public:
  void add(std::string name, Tensor<T> tensor) {
    if (index_.contains(name)) {
      throw IoError("weight bundle: duplicate parameter name '" + name + "'");
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(tensor));
  }

  const Tensor<T>* find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &entries_[it->second].second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }

  std::uint64_t payload_elements() const {
    std::uint64_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  bool bitwise_equal(const WeightBundle& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& [name, t] = entries_[i];
      const auto& [oname, ot] = other.entries_[i];
      if (name != oname || t.shape() != ot.shape()) return false;
      const auto a = t.values();
      const auto b = ot.values();
      for (std::size_t j = 0; j < a.size(); ++j) {
        if (std::memcmp(&a[j], &b[j], sizeof(T)) != 0) return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

namespace detail {

void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v);
void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

/// Cursor over a CRC-validated byte image.
struct Reader {
  const std::uint8_t* data = nullptr;
  std::size_t len = 0;
  std::size_t pos = 0;

  void need(std::size_t n) const;
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  void bytes(void* dst, std::size_t n);
};

/// Verifies magic, version and trailing CRC; returns a reader positioned
/// after the magic and version, plus the spec hash and entry count.
struct Envelope {
  Reader reader;
  std::uint32_t version = 0;
  std::uint64_t spec_hash = 0;
  std::uint32_t count = 0;
};
Envelope open_envelope(const std::vector<std::uint8_t>& bytes, const std::string& path);

}  // namespace detail

template <class T>
void save_weights(const WeightBundle<T>& bundle, const std::string& path,
                  std::uint64_t spec_hash) {
  std::vector<std::uint8_t> out;
  out.reserve(64 + bundle.payload_elements() * sizeof(T));
  out.insert(out.end(), {'S', 'W', 'F', 'T'});
  detail::append_u32(out, kWeightFormatVersion);
  detail::append_u64(out, spec_hash);
  detail::append_u32(out, std::uint32_t(bundle.size()));
  for (const auto& [name, tensor] : bundle.entries()) {
    if (name.size() > 0xffff) throw IoError("weights: parameter name too long: " + name);
    detail::append_u16(out, std::uint16_t(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(std::uint8_t(tensor.rank()));
    for (std::size_t e : tensor.shape()) detail::append_u32(out, std::uint32_t(e));
    out.push_back(std::uint8_t(dtype_traits<T>::tag));
    const auto* raw = reinterpret_cast<const std::uint8_t*>(tensor.data());
    out.insert(out.end(), raw, raw + tensor.size() * sizeof(T));
  }
  detail::append_u32(out, crc32(out.data(), out.size()));
  detail::write_file(path, out);
}

struct WeightEntryInfo {
  std::string name;
  std::vector<std::size_t> shape;
  Dtype dtype = Dtype::f32;
};

struct WeightFileInfo {
  std::uint32_t version = 0;
  std::uint64_t spec_hash = 0;
  std::vector<WeightEntryInfo> entries;
};

/// Reads names, shapes and dtypes without materializing payloads.
WeightFileInfo inspect_weights(const std::string& path);

template <class T>
struct LoadedWeights {
  WeightBundle<T> bundle;
  std::uint32_t version = 0;
  std::uint64_t spec_hash = 0;
};

template <class T>
LoadedWeights<T> load_weights(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  detail::Envelope env = detail::open_envelope(bytes, path);

  LoadedWeights<T> result;
  result.version = env.version;
  result.spec_hash = env.spec_hash;
  detail::Reader& r = env.reader;
  for (std::uint32_t i = 0; i < env.count; ++i) {
    const std::uint16_t name_len = r.u16();
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const std::uint8_t rank = r.u8();
    if (rank == 0 || rank > 4) {
      throw IoError("weights: parameter '" + name + "' has invalid rank " +
                    std::to_string(rank));
    }
    std::vector<std::size_t> shape(rank);
    std::size_t elems = 1;
    for (auto& e : shape) {
      e = r.u32();
      elems *= e;
    }
    const std::uint8_t dtype = r.u8();
    if (dtype != std::uint8_t(dtype_traits<T>::tag)) {
      throw IoError("weights: parameter '" + name + "' stored at a different precision; "
                    "mixing precisions is an error");
    }
    std::vector<T> data(elems);
    r.bytes(data.data(), elems * sizeof(T));
    result.bundle.add(std::move(name), Tensor<T>(std::move(shape), std::move(data)));
  }
  return result;
}

}  // namespace swiftattn::models
