#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rialto/bytes.hpp"
#include "rialto/errors.hpp"
#include "rialto/rng.hpp"

namespace rialto::group {

namespace detail {
constexpr std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}
constexpr std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t acc = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) acc = mulmod(acc, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return acc;
}
}  // namespace detail

/// Order-Q subgroup of the multiplicative group mod P, with fixed
/// generators. Small instantiations are enumerable, which is what the
/// brute-force tests need. Not for production use.
template <std::uint64_t P, std::uint64_t Q, std::uint64_t Gen, std::uint64_t HGen>
class SchnorrGroup {
  static_assert(P > 2 && Q > 1 && (P - 1) % Q == 0, "Q must divide P-1");
  static_assert(P < (std::uint64_t{1} << 63));
  static_assert(detail::powmod(Gen, Q, P) == 1 && Gen % P != 1, "g must have order Q");
  static_assert(detail::powmod(HGen, Q, P) == 1 && HGen % P != 1, "h must have order Q");

 public:
  static constexpr std::uint64_t kModulus = P;
  static constexpr std::uint64_t kOrder = Q;

  class Scalar {
   public:
    static constexpr std::size_t kBytes = 8;

    Scalar() = default;

    static Scalar zero() { return {}; }
    static Scalar one() { return from_u64(1); }
    static Scalar from_u64(std::uint64_t v) { return Scalar(v % Q); }
    static Scalar from_i64(std::int64_t v) {
      auto m = static_cast<std::int64_t>(Q);
      auto r = v % m;
      if (r < 0) r += m;
      return Scalar(static_cast<std::uint64_t>(r));
    }

    static Scalar from_wide(std::span<const std::uint8_t, 64> wide) {
      std::uint64_t acc = 0;
      for (auto b : wide) acc = static_cast<std::uint64_t>((static_cast<unsigned __int128>(acc) * 256 + b) % Q);
      return Scalar(acc);
    }

    static Scalar random(Rng& rng) { return Scalar(rng.below(Q)); }

    std::array<std::uint8_t, kBytes> to_bytes() const {
      std::array<std::uint8_t, kBytes> out{};
      for (std::size_t i = 0; i < kBytes; ++i) out[i] = static_cast<std::uint8_t>(v_ >> (8 * (kBytes - 1 - i)));
      return out;
    }

    static std::optional<Scalar> from_bytes(std::span<const std::uint8_t> be) {
      if (be.size() != kBytes) return std::nullopt;
      std::uint64_t v = read_u64_be(be);
      if (v >= Q) return std::nullopt;
      return Scalar(v);
    }

    bool is_zero() const { return v_ == 0; }
    std::optional<std::uint64_t> to_u64() const { return v_; }
    std::uint64_t value() const { return v_; }

    std::optional<std::int64_t> to_signed() const {
      if (v_ <= (Q - 1) / 2) return static_cast<std::int64_t>(v_);
      return -static_cast<std::int64_t>(Q - v_);
    }

    Scalar inverse() const {
      if (v_ == 0) throw ParameterError("schnorr group: inverse of zero scalar");
      return Scalar(detail::powmod(v_, Q - 2, Q));
    }

    friend Scalar operator+(const Scalar& a, const Scalar& b) {
      return Scalar(static_cast<std::uint64_t>((static_cast<unsigned __int128>(a.v_) + b.v_) % Q));
    }
    friend Scalar operator-(const Scalar& a, const Scalar& b) { return a + (-b); }
    friend Scalar operator*(const Scalar& a, const Scalar& b) { return Scalar(detail::mulmod(a.v_, b.v_, Q)); }
    Scalar operator-() const { return Scalar(v_ == 0 ? 0 : Q - v_); }
    Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
    Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
    Scalar& operator*=(const Scalar& o) { return *this = *this * o; }
    friend bool operator==(const Scalar&, const Scalar&) = default;

   private:
    explicit Scalar(std::uint64_t v) : v_(v) {}
    std::uint64_t v_ = 0;
  };

  class Element {
   public:
    static constexpr std::size_t kBytes = 8;

    Element() = default;  // identity

    static Element identity() { return {}; }

    /// No subgroup check; lets tests build malformed elements.
    static Element from_raw_unchecked(std::uint64_t x) { return Element(x); }

    static std::optional<Element> from_bytes(std::span<const std::uint8_t> be) {
      if (be.size() != kBytes) return std::nullopt;
      Element e(read_u64_be(be));
      if (!e.is_valid()) return std::nullopt;
      return e;
    }

    static Element from_hash(std::span<const std::uint8_t, 64> digest) {
      // Map into Z_P^* then project onto the order-Q subgroup.
      std::uint64_t acc = 0;
      for (auto b : digest) acc = static_cast<std::uint64_t>((static_cast<unsigned __int128>(acc) * 256 + b) % P);
      if (acc == 0) acc = 1;
      std::uint64_t e = detail::powmod(acc, (P - 1) / Q, P);
      return Element(e == 1 ? HGen : e);
    }

    std::array<std::uint8_t, kBytes> to_bytes() const {
      std::array<std::uint8_t, kBytes> out{};
      for (std::size_t i = 0; i < kBytes; ++i) out[i] = static_cast<std::uint8_t>(x_ >> (8 * (kBytes - 1 - i)));
      return out;
    }

    std::uint64_t value() const { return x_; }
    bool is_identity() const { return x_ == 1; }
    bool is_valid() const { return x_ > 0 && x_ < P && detail::powmod(x_, Q, P) == 1; }

    Element pow(const Scalar& k) const { return Element(detail::powmod(x_, k.value(), P)); }
    Element inverse() const { return Element(detail::powmod(x_, P - 2, P)); }

    friend Element operator*(const Element& a, const Element& b) { return Element(detail::mulmod(a.x_, b.x_, P)); }
    friend Element operator/(const Element& a, const Element& b) { return a * b.inverse(); }
    Element& operator*=(const Element& o) { return *this = *this * o; }
    Element& operator/=(const Element& o) { return *this = *this / o; }
    friend bool operator==(const Element&, const Element&) = default;

   private:
    explicit Element(std::uint64_t x) : x_(x) {}
    std::uint64_t x_ = 1;
  };

  static std::string_view name() {
    static const std::string n = "schnorr-p" + std::to_string(P) + "-q" + std::to_string(Q);
    return n;
  }

  /// 2^bits must stay below Q so that ranges do not wrap.
  static constexpr std::size_t kMaxRangeBits = [] {
    std::size_t bits = 0;
    while (bits < 62 && (std::uint64_t{1} << (bits + 1)) <= Q) ++bits;
    return bits;
  }();

  static const Element& g() {
    static const Element e = Element::from_raw_unchecked(Gen);
    return e;
  }
  static const Element& h() {
    static const Element e = Element::from_raw_unchecked(HGen);
    return e;
  }
};

/// Subgroup of order 11 in Z_23^*, g = 2, h = 3. Small enough to enumerate.
using TinyGroup = SchnorrGroup<23, 11, 2, 3>;

/// Safe-prime group with a 61-bit order. Fast enough for large randomized
/// sweeps while still fitting 32-bit rates and balances.
using Schnorr61 = SchnorrGroup<4611686018427377339ULL, 2305843009213688669ULL, 4, 3951255173133943925ULL>;

}  // namespace rialto::group
