// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "swiftattn/weights_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace swiftattn::models {

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace detail {

void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("weights: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("weights: short write to '" + path + "'");
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("weights: cannot open '" + path + "'");
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("weights: short read from '" + path + "'");
  return bytes;
}

void Reader::need(std::size_t n) const {
  if (pos + n > len) throw IoError("weights: file ends inside a record");
}
std::uint8_t Reader::u8() {
  need(1);
  return data[pos++];
}
std::uint16_t Reader::u16() {
  need(2);
  std::uint16_t v = std::uint16_t(data[pos]) | std::uint16_t(data[pos + 1]) << 8;
  pos += 2;
  return v;
}
std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(data[pos + i]) << (8 * i);
  pos += 4;
  return v;
}
std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(data[pos + i]) << (8 * i);
  pos += 8;
  return v;
}
void Reader::bytes(void* dst, std::size_t n) {
  need(n);
  std::memcpy(dst, data + pos, n);
  pos += n;
}

Envelope open_envelope(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  // Magic and CRC come first: a truncated file is rejected before any
  // structural parsing, and no partial bundle ever escapes.
  if (bytes.size() < 4 + 4 + 8 + 4 + 4) {
    throw IoError("weights: '" + path + "' is too short to be a weight file");
  }
  if (std::memcmp(bytes.data(), "SWFT", 4) != 0) {
    throw IoError("weights: '" + path + "' has no SWFT magic");
  }
  const std::uint32_t stored_crc =
      std::uint32_t(bytes[bytes.size() - 4]) | std::uint32_t(bytes[bytes.size() - 3]) << 8 |
      std::uint32_t(bytes[bytes.size() - 2]) << 16 | std::uint32_t(bytes[bytes.size() - 1]) << 24;
  const std::uint32_t actual_crc = crc32(bytes.data(), bytes.size() - 4);
  if (stored_crc != actual_crc) {
    throw IoError("weights: checksum mismatch in '" + path + "' (file truncated or corrupted)");
  }

  Envelope env;
  env.reader = Reader{bytes.data(), bytes.size() - 4, 4};
  env.version = env.reader.u32();
  if (env.version != kWeightFormatVersion) {
    throw IoError("weights: '" + path + "' has format version " + std::to_string(env.version) +
                  ", expected " + std::to_string(kWeightFormatVersion));
  }
  env.spec_hash = env.reader.u64();
  env.count = env.reader.u32();
  return env;
}

}  // namespace detail

WeightFileInfo inspect_weights(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  detail::Envelope env = detail::open_envelope(bytes, path);

  WeightFileInfo info;
  info.version = env.version;
  info.spec_hash = env.spec_hash;
  detail::Reader& r = env.reader;
  for (std::uint32_t i = 0; i < env.count; ++i) {
    WeightEntryInfo e;
    const std::uint16_t name_len = r.u16();
    e.name.resize(name_len);
    r.bytes(e.name.data(), name_len);
    const std::uint8_t rank = r.u8();
    if (rank == 0 || rank > 4) {
      throw IoError("weights: parameter '" + e.name + "' has invalid rank " +
                    std::to_string(rank));
    }
    e.shape.resize(rank);
    std::size_t elems = 1;
    for (auto& ext : e.shape) {
      ext = r.u32();
      elems *= ext;
    }
    const std::uint8_t dtype = r.u8();
    if (dtype > 1) throw IoError("weights: parameter '" + e.name + "' has unknown dtype");
    e.dtype = Dtype(dtype);
    r.need(elems * (e.dtype == Dtype::f32 ? 4 : 8));
    r.pos += elems * (e.dtype == Dtype::f32 ? 4 : 8);
    info.entries.push_back(std::move(e));
  }
  return info;
}

}  // namespace swiftattn::models
