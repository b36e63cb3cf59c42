#pragma once

#include <string_view>

#include "rialto/crypto/pedersen.hpp"
#include "rialto/transcript.hpp"

namespace rialto {

/// Schnorr-style proof of knowledge of (v, r) with c = g^v h^r.
template <PrimeOrderGroup G>
struct OpeningProof {
  typename G::Element announcement{};
  typename G::Scalar challenge{};
  typename G::Scalar response_value{};
  typename G::Scalar response_blinding{};
};

namespace detail {
template <PrimeOrderGroup G>
typename G::Scalar opening_challenge(const Commitment<G>& c, const typename G::Element& d, std::string_view context) {
  Transcript t = Transcript::for_group<G>("opening-proof");
  t.append("context", as_bytes(context));
  t.append_element<G>("commitment", c.element);
  t.append_element<G>("announcement", d);
  return t.challenge_nonzero<G>("challenge");
}
}  // namespace detail

/// A mismatched (v, r) still yields a proof object; it just won't verify.
template <PrimeOrderGroup G>
OpeningProof<G> prove_opening(const typename G::Scalar& value, const typename G::Scalar& blinding,
                              const Commitment<G>& c, std::string_view context, Rng& rng) {
  using Scalar = typename G::Scalar;
  const Scalar y = Scalar::random(rng);
  const Scalar s = Scalar::random(rng);
  OpeningProof<G> proof;
  proof.announcement = G::g().pow(y) * G::h().pow(s);
  proof.challenge = detail::opening_challenge<G>(c, proof.announcement, context);
  proof.response_value = y + proof.challenge * value;
  proof.response_blinding = s + proof.challenge * blinding;
  return proof;
}

template <PrimeOrderGroup G>
bool verify_opening(const Commitment<G>& c, const OpeningProof<G>& proof, std::string_view context) {
  if (!c.element.is_valid() || !proof.announcement.is_valid()) return false;
  if (proof.challenge != detail::opening_challenge<G>(c, proof.announcement, context)) return false;
  const auto lhs = G::g().pow(proof.response_value) * G::h().pow(proof.response_blinding);
  const auto rhs = proof.announcement * c.element.pow(proof.challenge);
  return lhs == rhs;
}

/// Proof of knowledge of x with target = h^x. Shows that a commitment
/// opens to a publicly claimed value once g^value is divided out.
template <PrimeOrderGroup G>
struct BlindingProof {
  typename G::Element announcement{};
  typename G::Scalar challenge{};
  typename G::Scalar response{};
};

namespace detail {
template <PrimeOrderGroup G>
typename G::Scalar blinding_challenge(const typename G::Element& target, const typename G::Element& d,
                                      std::string_view context) {
  Transcript t = Transcript::for_group<G>("blinding-proof");
  t.append("context", as_bytes(context));
  t.append_element<G>("target", target);
  t.append_element<G>("announcement", d);
  return t.challenge_nonzero<G>("challenge");
}
}  // namespace detail

template <PrimeOrderGroup G>
BlindingProof<G> prove_blinding(const typename G::Scalar& x, const typename G::Element& target,
                                std::string_view context, Rng& rng) {
  const auto k = G::Scalar::random(rng);
  BlindingProof<G> proof;
  proof.announcement = G::h().pow(k);
  proof.challenge = detail::blinding_challenge<G>(target, proof.announcement, context);
  proof.response = k + proof.challenge * x;
  return proof;
}

template <PrimeOrderGroup G>
bool verify_blinding(const typename G::Element& target, const BlindingProof<G>& proof, std::string_view context) {
  if (!target.is_valid() || !proof.announcement.is_valid()) return false;
  if (proof.challenge != detail::blinding_challenge<G>(target, proof.announcement, context)) return false;
  return G::h().pow(proof.response) == proof.announcement * target.pow(proof.challenge);
}

/// Convenience: c opens to the public `value` under some blinding.
template <PrimeOrderGroup G>
bool verify_public_value(const Commitment<G>& c, std::int64_t value, const BlindingProof<G>& proof,
                         std::string_view context) {
  return verify_blinding<G>((c / commit_public<G>(value)).element, proof, context);
}

}  // namespace rialto
