#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "v2x/result.hpp"

namespace v2x {

/// Append-only big-endian byte builder used for wire frames, canonical
/// signature input and certificate to-be-signed blocks.
class ByteWriter {
 public:
  void u8(uint8_t v) { m_buf.push_back(v); }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i16(int16_t v) { u16(static_cast<uint16_t>(v)); }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void raw(std::span<const uint8_t> bytes);

  const std::vector<uint8_t>& bytes() const { return m_buf; }
  std::vector<uint8_t> take() { return std::move(m_buf); }

 private:
  std::vector<uint8_t> m_buf;
};

/// Bounds-checked big-endian reader; any read past the end yields TRUNCATED.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : m_data(data) {}

  Result<uint8_t> u8();
  Result<uint16_t> u16();
  Result<uint32_t> u32();
  Result<uint64_t> u64();
  Result<int16_t> i16();
  Result<int32_t> i32();

  size_t pos() const { return m_pos; }
  size_t remaining() const { return m_data.size() - m_pos; }
  Result<std::span<const uint8_t>> raw(size_t n);

 private:
  std::span<const uint8_t> m_data;
  size_t m_pos = 0;
};

std::string to_hex(std::span<const uint8_t> bytes);
Result<std::vector<uint8_t>> from_hex(const std::string& hex);

/// FNV-1a 64-bit, used for the run determinism hash.
uint64_t fnv1a(std::span<const uint8_t> bytes, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t fnv1a(const std::string& s, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace v2x
