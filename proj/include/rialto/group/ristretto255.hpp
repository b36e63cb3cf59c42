#pragma once

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string_view>

#include "rialto/bytes.hpp"
#include "rialto/errors.hpp"
#include "rialto/rng.hpp"

namespace rialto::group {

/// Prime-order group ristretto255 (order 2^252 + 27742317777372353535851937790883648493),
/// backed by libsodium. Elements are canonical 32-byte encodings; the
/// identity encodes as all zeros.
class Ristretto255 {
 public:
  class Scalar {
   public:
    static constexpr std::size_t kBytes = crypto_core_ristretto255_SCALARBYTES;

    Scalar() = default;

    static Scalar zero() { return {}; }
    static Scalar one() { return from_u64(1); }

    static Scalar from_u64(std::uint64_t v) {
      Scalar s;
      for (std::size_t i = 0; i < 8; ++i) s.le_[i] = static_cast<std::uint8_t>(v >> (8 * i));
      return s;
    }

    static Scalar from_i64(std::int64_t v) {
      if (v >= 0) return from_u64(static_cast<std::uint64_t>(v));
      return -from_u64(static_cast<std::uint64_t>(-(v + 1)) + 1);
    }

    /// Reduces 64 uniformly random bytes (hash output) mod the group order.
    static Scalar from_wide(std::span<const std::uint8_t, 64> wide) {
      Scalar s;
      crypto_core_ristretto255_scalar_reduce(s.le_.data(), wide.data());
      return s;
    }

    static Scalar random(Rng& rng) {
      std::array<std::uint8_t, 64> wide{};
      rng.fill(wide);
      return from_wide(wide);
    }

    /// Big-endian canonical encoding.
    std::array<std::uint8_t, kBytes> to_bytes() const {
      std::array<std::uint8_t, kBytes> be{};
      std::reverse_copy(le_.begin(), le_.end(), be.begin());
      return be;
    }

    static std::optional<Scalar> from_bytes(std::span<const std::uint8_t> be) {
      if (be.size() != kBytes) return std::nullopt;
      Scalar s;
      std::reverse_copy(be.begin(), be.end(), s.le_.begin());
      std::array<std::uint8_t, 64> wide{};
      std::copy(s.le_.begin(), s.le_.end(), wide.begin());
      Scalar reduced = from_wide(wide);
      if (reduced.le_ != s.le_) return std::nullopt;
      return s;
    }

    bool is_zero() const { return sodium_is_zero(le_.data(), le_.size()) == 1; }

    /// The value if it fits in 64 bits.
    std::optional<std::uint64_t> to_u64() const {
      for (std::size_t i = 8; i < kBytes; ++i)
        if (le_[i] != 0) return std::nullopt;
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(le_[i]) << (8 * i);
      return v;
    }

    /// Interprets the scalar as a small signed integer in (-2^62, 2^62).
    std::optional<std::int64_t> to_signed() const {
      constexpr std::uint64_t kBound = std::uint64_t{1} << 62;
      if (auto v = to_u64(); v && *v < kBound) return static_cast<std::int64_t>(*v);
      if (auto v = (-*this).to_u64(); v && *v < kBound) return -static_cast<std::int64_t>(*v);
      return std::nullopt;
    }

    Scalar inverse() const {
      Scalar out;
      if (crypto_core_ristretto255_scalar_invert(out.le_.data(), le_.data()) != 0)
        throw ParameterError("ristretto255: inverse of zero scalar");
      return out;
    }

    friend Scalar operator+(const Scalar& a, const Scalar& b) {
      Scalar out;
      crypto_core_ristretto255_scalar_add(out.le_.data(), a.le_.data(), b.le_.data());
      return out;
    }
    friend Scalar operator-(const Scalar& a, const Scalar& b) {
      Scalar out;
      crypto_core_ristretto255_scalar_sub(out.le_.data(), a.le_.data(), b.le_.data());
      return out;
    }
    friend Scalar operator*(const Scalar& a, const Scalar& b) {
      Scalar out;
      crypto_core_ristretto255_scalar_mul(out.le_.data(), a.le_.data(), b.le_.data());
      return out;
    }
    Scalar operator-() const {
      Scalar out;
      crypto_core_ristretto255_scalar_negate(out.le_.data(), le_.data());
      return out;
    }
    Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
    Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
    Scalar& operator*=(const Scalar& o) { return *this = *this * o; }
    friend bool operator==(const Scalar&, const Scalar&) = default;

    const std::array<std::uint8_t, kBytes>& little_endian() const { return le_; }

   private:
    std::array<std::uint8_t, kBytes> le_{};
  };

  class Element {
   public:
    static constexpr std::size_t kBytes = crypto_core_ristretto255_BYTES;

    Element() = default;  // identity

    static Element identity() { return {}; }

    static std::optional<Element> from_bytes(std::span<const std::uint8_t> enc) {
      if (enc.size() != kBytes) return std::nullopt;
      Element e;
      std::copy(enc.begin(), enc.end(), e.enc_.begin());
      if (!e.is_identity() && crypto_core_ristretto255_is_valid_point(e.enc_.data()) != 1)
        return std::nullopt;
      return e;
    }

    /// Hash-to-group; nobody learns the discrete log of the result.
    static Element from_hash(std::span<const std::uint8_t, 64> digest) {
      Element e;
      crypto_core_ristretto255_from_hash(e.enc_.data(), digest.data());
      return e;
    }

    const std::array<std::uint8_t, kBytes>& to_bytes() const { return enc_; }

    bool is_identity() const { return sodium_is_zero(enc_.data(), enc_.size()) == 1; }
    bool is_valid() const {
      return is_identity() || crypto_core_ristretto255_is_valid_point(enc_.data()) == 1;
    }

    Element pow(const Scalar& k) const;

    Element inverse() const { return Element{} / *this; }

    friend Element operator*(const Element& a, const Element& b) {
      Element out;
      if (crypto_core_ristretto255_add(out.enc_.data(), a.enc_.data(), b.enc_.data()) != 0)
        throw ParameterError("ristretto255: invalid element in group operation");
      return out;
    }
    friend Element operator/(const Element& a, const Element& b) {
      Element out;
      if (crypto_core_ristretto255_sub(out.enc_.data(), a.enc_.data(), b.enc_.data()) != 0)
        throw ParameterError("ristretto255: invalid element in group operation");
      return out;
    }
    Element& operator*=(const Element& o) { return *this = *this * o; }
    Element& operator/=(const Element& o) { return *this = *this / o; }
    friend bool operator==(const Element&, const Element&) = default;

   private:
    std::array<std::uint8_t, kBytes> enc_{};
  };

  static constexpr std::string_view name() { return "ristretto255"; }

  /// Protocol ranges must stay below this many bits.
  static constexpr std::size_t kMaxRangeBits = 64;

  static const Element& g() {
    static const Element gen = [] {
      detail::sodium_ready();
      std::array<std::uint8_t, 32> one{};
      one[0] = 1;
      std::array<std::uint8_t, 32> enc{};
      if (crypto_scalarmult_ristretto255_base(enc.data(), one.data()) != 0)
        throw ParameterError("ristretto255: base point unavailable");
      return *Element::from_bytes(enc);
    }();
    return gen;
  }

  static const Element& h() {
    static const Element gen = [] {
      std::array<std::uint8_t, 64> digest{};
      Bytes seed;
      for (char c : std::string_view("rialto/pedersen/h")) seed.push_back(static_cast<std::uint8_t>(c));
      const auto& genc = g().to_bytes();
      seed.insert(seed.end(), genc.begin(), genc.end());
      crypto_hash_sha512(digest.data(), seed.data(), seed.size());
      return Element::from_hash(digest);
    }();
    return gen;
  }
};

inline Ristretto255::Element Ristretto255::Element::pow(const Scalar& k) const {
  if (k.is_zero() || is_identity()) return {};
  Element out;
  int rc = (*this == Ristretto255::g())
               ? crypto_scalarmult_ristretto255_base(out.enc_.data(), k.little_endian().data())
               : crypto_scalarmult_ristretto255(out.enc_.data(), k.little_endian().data(), enc_.data());
  if (rc != 0) return {};  // result is the identity
  return out;
}

}  // namespace rialto::group
