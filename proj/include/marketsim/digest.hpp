#pragma once

#include <openssl/evp.h>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace marketsim {

using Bytes = std::vector<std::uint8_t>;

//! 256-bit digest value. Ordered so it can key std::map deterministically.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  bool is_zero() const {
    for (auto b : bytes)
      if (b != 0) return false;
    return true;
  }

  std::string hex() const;
  //! Short form used in traces and ledger dumps: first 8 hex chars.
  std::string hex8() const { return hex().substr(0, 8); }

  //! Big-endian interpretation of the first 8 bytes, e.g. for modular draws.
  std::uint64_t lead64() const {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
  }
};

inline std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

inline std::string Digest::hex() const { return to_hex(bytes); }

inline std::optional<Digest> digest_from_hex(std::string_view hex) {
  if (hex.size() != 64) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Digest d;
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return d;
}

inline Digest sha256(std::span<const std::uint8_t> data) {
  Digest out;
  unsigned int len = 0;
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* p = data.empty() ? &kEmpty : data.data();
  if (EVP_Digest(p, data.size(), out.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.bytes.size())
    throw std::runtime_error("sha256: EVP_Digest failed");
  return out;
}

inline Digest sha256(const Bytes& data) {
  return sha256(std::span<const std::uint8_t>(data.data(), data.size()));
}

//! Canonical byte encoding shared by transaction ids, block digests and
//! commitments. The rules are fixed forever: integers are 8-byte big-endian
//! (signed values as two's complement), byte strings are length-prefixed,
//! fields are appended in declaration order. Every node must produce the
//! same bytes for the same value or digests diverge.
class Encoder {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(v); }

  void put_bool(bool v) { buf_.push_back(v ? 1 : 0); }

  void put_u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }

  void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }

  void put_raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  void put_bytes(std::span<const std::uint8_t> b) {
    put_u64(b.size());
    put_raw(b);
  }

  void put_str(std::string_view s) {
    put_u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  void put_digest(const Digest& d) { put_raw(d.bytes); }

  void put_opt_i64(const std::optional<std::int64_t>& v) {
    put_bool(v.has_value());
    if (v) put_i64(*v);
  }

  void put_opt_u64(const std::optional<std::uint64_t>& v) {
    put_bool(v.has_value());
    if (v) put_u64(*v);
  }

  void put_opt_digest(const std::optional<Digest>& v) {
    put_bool(v.has_value());
    if (v) put_digest(*v);
  }

  void put_vec_i64(const std::vector<std::int64_t>& vs) {
    put_u64(vs.size());
    for (auto v : vs) put_i64(v);
  }

  void put_vec_str(const std::vector<std::string>& vs) {
    put_u64(vs.size());
    for (const auto& s : vs) put_str(s);
  }

  const Bytes& data() const { return buf_; }

  Digest digest() const { return sha256(buf_); }

 private:
  Bytes buf_;
};

}  // namespace marketsim
