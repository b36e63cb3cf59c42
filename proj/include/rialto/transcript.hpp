#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "rialto/bytes.hpp"
#include "rialto/group/concept.hpp"

namespace rialto {

/// Fiat-Shamir transcript: SHA-512 over length-prefixed, labelled items.
/// Challenges are derived from a copy of the running state, so the
/// transcript can keep absorbing afterwards.
class Transcript {
 public:
  explicit Transcript(std::string_view domain) {
    detail::sodium_ready();
    crypto_hash_sha512_init(&state_);
    append("rialto/transcript/v1", as_bytes(domain));
  }

  template <PrimeOrderGroup G>
  static Transcript for_group(std::string_view domain) {
    Transcript t(domain);
    t.append("group", as_bytes(G::name()));
    t.append_element<G>("g", G::g());
    t.append_element<G>("h", G::h());
    return t;
  }

  void append(std::string_view label, std::span<const std::uint8_t> data) {
    absorb_sized(as_bytes(label));
    absorb_sized(data);
  }

  void append_u64(std::string_view label, std::uint64_t v) {
    Bytes buf;
    put_u64_be(buf, v);
    append(label, buf);
  }

  template <PrimeOrderGroup G>
  void append_element(std::string_view label, const typename G::Element& e) {
    const auto enc = e.to_bytes();
    append(label, enc);
  }

  template <PrimeOrderGroup G>
  void append_scalar(std::string_view label, const typename G::Scalar& s) {
    const auto enc = s.to_bytes();
    append(label, enc);
  }

  std::array<std::uint8_t, 64> digest(std::string_view label) const {
    crypto_hash_sha512_state copy = state_;
    Bytes tail;
    put_u64_be(tail, label.size());
    tail.insert(tail.end(), label.begin(), label.end());
    crypto_hash_sha512_update(&copy, tail.data(), tail.size());
    std::array<std::uint8_t, 64> out{};
    crypto_hash_sha512_final(&copy, out.data());
    return out;
  }

  template <PrimeOrderGroup G>
  typename G::Scalar challenge_scalar(std::string_view label) const {
    const auto d = digest(label);
    return G::Scalar::from_wide(d);
  }

  /// Same as challenge_scalar but never zero. A zero challenge would make
  /// the verification equation independent of the witness, which matters
  /// in small test groups where it happens with probability 1/q.
  template <PrimeOrderGroup G>
  typename G::Scalar challenge_nonzero(std::string_view label) const {
    for (std::uint64_t counter = 0;; ++counter) {
      Transcript t = *this;
      t.append_u64("retry", counter);
      auto e = t.challenge_scalar<G>(label);
      if (!e.is_zero()) return e;
    }
  }

 private:
  void absorb_sized(std::span<const std::uint8_t> data) {
    Bytes len;
    put_u64_be(len, data.size());
    crypto_hash_sha512_update(&state_, len.data(), len.size());
    crypto_hash_sha512_update(&state_, data.data(), data.size());
  }

  crypto_hash_sha512_state state_{};
};

}  // namespace rialto
