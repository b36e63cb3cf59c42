#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rialto/crypto/pedersen.hpp"
#include "rialto/errors.hpp"
#include "rialto/transcript.hpp"

namespace rialto {

inline constexpr std::size_t kDefaultRangeBits = 32;

/// Disjunctive proof that a bit commitment is h^x or g*h^x.
template <PrimeOrderGroup G>
struct BitProof {
  typename G::Scalar challenge_zero{};
  typename G::Scalar challenge_one{};
  typename G::Scalar response_zero{};
  typename G::Scalar response_one{};
};

/// Proof that a commitment opens to a value in [0, 2^n_bits).
///
/// The bit commitments multiply out (weighted by powers of two) to the
/// target commitment exactly, so no separate blinding response is needed.
template <PrimeOrderGroup G>
struct RangeProof {
  std::vector<typename G::Element> bit_commitments;
  std::vector<BitProof<G>> bit_proofs;

  std::size_t n_bits() const { return bit_commitments.size(); }
};

namespace detail {

template <PrimeOrderGroup G>
typename G::Scalar bit_challenge(const Commitment<G>& target, std::size_t n_bits, std::size_t j,
                                 const typename G::Element& bit_commitment, const typename G::Element& a0,
                                 const typename G::Element& a1, std::string_view context) {
  Transcript t = Transcript::for_group<G>("range-proof/bit");
  t.append("context", as_bytes(context));
  t.append_u64("n_bits", n_bits);
  t.append_element<G>("target", target.element);
  t.append_u64("index", j);
  t.append_element<G>("bit", bit_commitment);
  t.append_element<G>("a0", a0);
  t.append_element<G>("a1", a1);
  return t.challenge_scalar<G>("challenge");
}

template <PrimeOrderGroup G>
void check_range_bits(std::size_t n_bits) {
  if (n_bits == 0 || n_bits > G::kMaxRangeBits || n_bits > 62)
    throw ParameterError("range proof: n_bits " + std::to_string(n_bits) + " unsupported by " +
                         std::string(G::name()));
}

}  // namespace detail

/// Throws RangeProofError when value is outside [0, 2^n_bits); the caller
/// is expected to hold c = g^value h^blinding.
template <PrimeOrderGroup G>
RangeProof<G> prove_range(std::int64_t value, const typename G::Scalar& blinding, std::size_t n_bits,
                          std::string_view context, Rng& rng) {
  using Scalar = typename G::Scalar;
  using Element = typename G::Element;
  detail::check_range_bits<G>(n_bits);
  if (value < 0 || static_cast<std::uint64_t>(value) >= (std::uint64_t{1} << n_bits))
    throw RangeProofError("range proof: value " + std::to_string(value) + " not in [0, 2^" +
                          std::to_string(n_bits) + ")");

  const Commitment<G> target = commit<G>(value, blinding);

  std::vector<Scalar> bit_blindings(n_bits);
  Scalar weighted{};
  Scalar weight = Scalar::one();
  const Scalar two = Scalar::from_u64(2);
  for (std::size_t j = 0; j < n_bits; ++j) {
    if (j > 0) {
      bit_blindings[j] = Scalar::random(rng);
      weighted += bit_blindings[j] * weight;
    }
    weight *= two;
  }
  bit_blindings[0] = blinding - weighted;

  RangeProof<G> proof;
  proof.bit_commitments.reserve(n_bits);
  proof.bit_proofs.reserve(n_bits);
  for (std::size_t j = 0; j < n_bits; ++j) {
    const bool bit = (static_cast<std::uint64_t>(value) >> j) & 1U;
    const Scalar& x = bit_blindings[j];
    Element cj = G::h().pow(x);
    if (bit) cj = G::g() * cj;

    // Real branch for `bit`, simulated branch for the other.
    const Element y_other = bit ? cj : cj / G::g();
    const Scalar k = Scalar::random(rng);
    const Scalar e_sim = Scalar::random(rng);
    const Scalar z_sim = Scalar::random(rng);
    const Element a_real = G::h().pow(k);
    const Element a_sim = G::h().pow(z_sim) / y_other.pow(e_sim);

    const Element& a0 = bit ? a_sim : a_real;
    const Element& a1 = bit ? a_real : a_sim;
    const Scalar e = detail::bit_challenge<G>(target, n_bits, j, cj, a0, a1, context);
    const Scalar e_real = e - e_sim;
    const Scalar z_real = k + e_real * x;

    BitProof<G> bp;
    if (bit) {
      bp = {e_sim, e_real, z_sim, z_real};
    } else {
      bp = {e_real, e_sim, z_real, z_sim};
    }
    proof.bit_commitments.push_back(cj);
    proof.bit_proofs.push_back(bp);
  }
  return proof;
}

template <PrimeOrderGroup G>
bool verify_range(const Commitment<G>& target, const RangeProof<G>& proof, std::size_t n_bits,
                  std::string_view context) {
  using Element = typename G::Element;
  if (n_bits == 0 || n_bits > G::kMaxRangeBits || n_bits > 62) return false;
  if (proof.bit_commitments.size() != n_bits || proof.bit_proofs.size() != n_bits) return false;
  if (!target.element.is_valid()) return false;

  Element acc{};
  for (std::size_t j = n_bits; j-- > 0;) {
    const Element& cj = proof.bit_commitments[j];
    if (!cj.is_valid()) return false;
    acc = acc * acc * cj;
  }
  if (acc != target.element) return false;

  for (std::size_t j = 0; j < n_bits; ++j) {
    const Element& cj = proof.bit_commitments[j];
    const auto& bp = proof.bit_proofs[j];
    const Element a0 = G::h().pow(bp.response_zero) / cj.pow(bp.challenge_zero);
    const Element a1 = G::h().pow(bp.response_one) / (cj / G::g()).pow(bp.challenge_one);
    const auto e = detail::bit_challenge<G>(target, n_bits, j, cj, a0, a1, context);
    if (bp.challenge_zero + bp.challenge_one != e) return false;
  }
  return true;
}

}  // namespace rialto
