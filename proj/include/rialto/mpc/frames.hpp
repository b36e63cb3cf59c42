#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rialto/bytes.hpp"
#include "rialto/errors.hpp"
#include "rialto/group/concept.hpp"

namespace rialto::mpc {

using ActorId = std::size_t;

enum class Tag : std::uint8_t {
  share_bundle = 1,
  validate_request,
  validate_input,
  validate_output,
  validate_verdict,
  gate_expect,
  compare_request,
  compare_share,
  open_request,
  open_share,
  shuffle_request,
  shuffle_share,
  op_result,
  op_timeout,
  op_incomplete,
  session_open,
  session_close,
  missing_share,
};

struct Frame {
  Tag tag{};
  Bytes payload;
};

/// Wire format: u32 big-endian length of (tag + payload), tag byte, payload.
inline Bytes encode_frame(const Frame& frame) {
  Bytes out;
  out.reserve(frame.payload.size() + 5);
  put_u32_be(out, static_cast<std::uint32_t>(frame.payload.size() + 1));
  out.push_back(static_cast<std::uint8_t>(frame.tag));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

/// Pops one complete frame from the front of `buffer`, if present.
inline std::optional<Frame> take_frame(Bytes& buffer) {
  if (buffer.size() < 4) return std::nullopt;
  const std::uint32_t len = read_u32_be(buffer);
  if (len == 0) throw ProtocolAbort("malformed frame: zero length");
  if (buffer.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  Frame f{static_cast<Tag>(buffer[4]), Bytes(buffer.begin() + 5, buffer.begin() + 4 + len)};
  buffer.erase(buffer.begin(), buffer.begin() + 4 + len);
  return f;
}

class Writer {
 public:
  Writer& u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }
  Writer& u32(std::uint32_t v) {
    put_u32_be(buf_, v);
    return *this;
  }
  Writer& u64(std::uint64_t v) {
    put_u64_be(buf_, v);
    return *this;
  }
  Writer& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  Writer& boolean(bool v) { return u8(v ? 1 : 0); }
  Writer& bytes(std::span<const std::uint8_t> data) {
    u32(static_cast<std::uint32_t>(data.size()));
    buf_.insert(buf_.end(), data.begin(), data.end());
    return *this;
  }
  Writer& str(std::string_view s) { return bytes(as_bytes(s)); }
  template <PrimeOrderGroup G>
  Writer& scalar(const typename G::Scalar& s) {
    const auto enc = s.to_bytes();
    buf_.insert(buf_.end(), enc.begin(), enc.end());
    return *this;
  }
  template <PrimeOrderGroup G>
  Writer& element(const typename G::Element& e) {
    const auto enc = e.to_bytes();
    buf_.insert(buf_.end(), enc.begin(), enc.end());
    return *this;
  }

  Bytes take() { return std::move(buf_); }
  Frame frame(Tag tag) { return {tag, take()}; }

 private:
  Bytes buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint32_t u32() { return read_u32_be(need(4)); }
  std::uint64_t u64() { return read_u64_be(need(8)); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  bool boolean() { return u8() != 0; }
  Bytes bytes() {
    const auto n = u32();
    auto s = need(n);
    return Bytes(s.begin(), s.end());
  }
  std::string str() {
    auto b = bytes();
    return std::string(b.begin(), b.end());
  }
  template <PrimeOrderGroup G>
  typename G::Scalar scalar() {
    constexpr auto n = G::Scalar::kBytes;
    auto s = G::Scalar::from_bytes(need(n));
    if (!s) throw ProtocolAbort("malformed frame: non-canonical scalar");
    return *s;
  }
  template <PrimeOrderGroup G>
  typename G::Element element() {
    constexpr auto n = G::Element::kBytes;
    auto e = G::Element::from_bytes(need(n));
    if (!e) throw ProtocolAbort("malformed frame: invalid group element");
    return *e;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> need(std::size_t n) {
    if (data_.size() - pos_ < n) throw ProtocolAbort("malformed frame: truncated payload");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace rialto::mpc
