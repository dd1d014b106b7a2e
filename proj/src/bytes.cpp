#include "v2x/bytes.hpp"

namespace v2x {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::INVALID_FIELD: return "INVALID_FIELD";
    case Errc::TRUNCATED: return "TRUNCATED";
    case Errc::BAD_MAGIC: return "BAD_MAGIC";
    case Errc::UNKNOWN_KIND: return "UNKNOWN_KIND";
    case Errc::TIME_IN_PAST: return "TIME_IN_PAST";
    case Errc::DEST_NOT_ATTACHED: return "DEST_NOT_ATTACHED";
    case Errc::NO_CHANNEL_MEETS_QOS: return "NO_CHANNEL_MEETS_QOS";
    case Errc::SENDER_UNKNOWN: return "SENDER_UNKNOWN";
    case Errc::EXPIRED: return "EXPIRED";
    case Errc::NO_BROKER_FOR_POSITION: return "NO_BROKER_FOR_POSITION";
    case Errc::UNKNOWN_STATION: return "UNKNOWN_STATION";
    case Errc::WRONG_SOURCE: return "WRONG_SOURCE";
    case Errc::TOO_FAR: return "TOO_FAR";
    case Errc::OUT_OF_REGION: return "OUT_OF_REGION";
    case Errc::STATION_REVOKED: return "STATION_REVOKED";
    case Errc::EC_INVALID: return "EC_INVALID";
    case Errc::EC_REVOKED: return "EC_REVOKED";
    case Errc::AT_EXPIRED: return "AT_EXPIRED";
    case Errc::KIND_NOT_PERMITTED: return "KIND_NOT_PERMITTED";
    case Errc::BAD_SIGNATURE: return "BAD_SIGNATURE";
    case Errc::CHAIN_INVALID: return "CHAIN_INVALID";
    case Errc::REVOKED: return "REVOKED";
    case Errc::UNAUTHORIZED: return "UNAUTHORIZED";
    case Errc::POOL_EXHAUSTED: return "POOL_EXHAUSTED";
    case Errc::SCENARIO_INVALID: return "SCENARIO_INVALID";
  }
  return "UNKNOWN";
}

void ByteWriter::u16(uint16_t v) {
  m_buf.push_back(static_cast<uint8_t>(v >> 8));
  m_buf.push_back(static_cast<uint8_t>(v));
}

void ByteWriter::u32(uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8)
    m_buf.push_back(static_cast<uint8_t>(v >> shift));
}

void ByteWriter::u64(uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    m_buf.push_back(static_cast<uint8_t>(v >> shift));
}

void ByteWriter::raw(std::span<const uint8_t> bytes) {
  m_buf.insert(m_buf.end(), bytes.begin(), bytes.end());
}

Result<uint8_t> ByteReader::u8() {
  if (remaining() < 1) return Error{Errc::TRUNCATED, "need 1 byte"};
  return m_data[m_pos++];
}

Result<uint16_t> ByteReader::u16() {
  if (remaining() < 2) return Error{Errc::TRUNCATED, "need 2 bytes"};
  uint16_t v = static_cast<uint16_t>(m_data[m_pos] << 8 | m_data[m_pos + 1]);
  m_pos += 2;
  return v;
}

Result<uint32_t> ByteReader::u32() {
  if (remaining() < 4) return Error{Errc::TRUNCATED, "need 4 bytes"};
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = v << 8 | m_data[m_pos + i];
  m_pos += 4;
  return v;
}

Result<uint64_t> ByteReader::u64() {
  if (remaining() < 8) return Error{Errc::TRUNCATED, "need 8 bytes"};
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | m_data[m_pos + i];
  m_pos += 8;
  return v;
}

Result<int16_t> ByteReader::i16() {
  auto v = u16();
  if (!v) return v.error();
  return static_cast<int16_t>(*v);
}

Result<int32_t> ByteReader::i32() {
  auto v = u32();
  if (!v) return v.error();
  return static_cast<int32_t>(*v);
}

Result<std::span<const uint8_t>> ByteReader::raw(size_t n) {
  if (remaining() < n) return Error{Errc::TRUNCATED, "need " + std::to_string(n) + " bytes"};
  auto out = m_data.subspan(m_pos, n);
  m_pos += n;
  return out;
}

std::string to_hex(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

static int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

Result<std::vector<uint8_t>> from_hex(const std::string& hex) {
  std::vector<uint8_t> out;
  int hi = -1;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
    int nib = hex_nibble(c);
    if (nib < 0) return Error{Errc::INVALID_FIELD, "bad hex digit"};
    if (hi < 0) {
      hi = nib;
    } else {
      out.push_back(static_cast<uint8_t>(hi << 4 | nib));
      hi = -1;
    }
  }
  if (hi >= 0) return Error{Errc::INVALID_FIELD, "odd hex length"};
  return out;
}

uint64_t fnv1a(std::span<const uint8_t> bytes, uint64_t seed) {
  uint64_t h = seed;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a(const std::string& s, uint64_t seed) {
  return fnv1a(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()), seed);
}

}  // namespace v2x
