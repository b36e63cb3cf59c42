#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rialto/bytes.hpp"
#include "rialto/group/concept.hpp"

namespace rialto {

/// Pedersen commitment g^v h^r. Multiplying commitments adds openings.
template <PrimeOrderGroup G>
struct Commitment {
  using Element = typename G::Element;
  using Scalar = typename G::Scalar;

  Element element{};

  static Commitment identity() { return {}; }

  friend Commitment operator*(const Commitment& a, const Commitment& b) { return {a.element * b.element}; }
  friend Commitment operator/(const Commitment& a, const Commitment& b) { return {a.element / b.element}; }
  Commitment& operator*=(const Commitment& o) { return *this = *this * o; }
  Commitment& operator/=(const Commitment& o) { return *this = *this / o; }
  Commitment pow(const Scalar& k) const { return {element.pow(k)}; }
  friend bool operator==(const Commitment&, const Commitment&) = default;

  std::string hex() const {
    const auto enc = element.to_bytes();
    return to_hex(enc);
  }
  static std::optional<Commitment> from_hex(std::string_view h) {
    auto raw = rialto::from_hex(h);
    if (!raw) return std::nullopt;
    auto e = Element::from_bytes(*raw);
    if (!e) return std::nullopt;
    return Commitment{*e};
  }
};

template <PrimeOrderGroup G>
Commitment<G> commit(const typename G::Scalar& value, const typename G::Scalar& blinding) {
  return {G::g().pow(value) * G::h().pow(blinding)};
}

template <PrimeOrderGroup G>
Commitment<G> commit(std::int64_t value, const typename G::Scalar& blinding) {
  return commit<G>(G::Scalar::from_i64(value), blinding);
}

/// g^v on its own; public amounts enter commitments this way.
template <PrimeOrderGroup G>
Commitment<G> commit_public(std::int64_t value) {
  return {G::g().pow(G::Scalar::from_i64(value))};
}

/// An opening known to its owner (or to the ledger in test mode).
template <PrimeOrderGroup G>
struct Opening {
  std::int64_t value = 0;
  typename G::Scalar blinding{};

  Commitment<G> commitment() const { return commit<G>(value, blinding); }
  bool opens(const Commitment<G>& c) const { return commitment() == c; }

  friend Opening operator+(const Opening& a, const Opening& b) { return {a.value + b.value, a.blinding + b.blinding}; }
  friend Opening operator-(const Opening& a, const Opening& b) { return {a.value - b.value, a.blinding - b.blinding}; }
  Opening& operator+=(const Opening& o) { return *this = *this + o; }
  Opening& operator-=(const Opening& o) { return *this = *this - o; }
  friend bool operator==(const Opening&, const Opening&) = default;
};

}  // namespace rialto
