#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "rialto/crypto/pedersen.hpp"
#include "rialto/errors.hpp"

namespace rialto {

enum class SharingScheme { additive, threshold };

/// Which parties hold shares and how many are needed. For additive sharing
/// the threshold equals the party count.
struct SharingParams {
  SharingScheme scheme = SharingScheme::additive;
  std::size_t parties = 0;
  std::size_t threshold = 0;

  static SharingParams additive(std::size_t m) { return {SharingScheme::additive, m, m}; }
  static SharingParams threshold_of(std::size_t k, std::size_t n) { return {SharingScheme::threshold, n, k}; }
  /// Honest-majority threshold floor(n/2) + 1.
  static SharingParams honest_majority(std::size_t n) { return threshold_of(n / 2 + 1, n); }
};

template <PrimeOrderGroup G>
struct Share {
  std::size_t party = 0;  // 1-based; also the evaluation point for threshold shares
  typename G::Scalar value{};
};

template <PrimeOrderGroup G>
struct ShareSet {
  SharingParams params;
  std::vector<Share<G>> shares;
};

template <PrimeOrderGroup G>
ShareSet<G> split_additive(const typename G::Scalar& secret, std::size_t m, Rng& rng) {
  if (m < 2) throw ParameterError("split_additive: need at least 2 parties, got " + std::to_string(m));
  ShareSet<G> set{SharingParams::additive(m), {}};
  set.shares.reserve(m);
  typename G::Scalar rest = secret;
  for (std::size_t i = 1; i < m; ++i) {
    auto s = G::Scalar::random(rng);
    rest -= s;
    set.shares.push_back({i, s});
  }
  set.shares.push_back({m, rest});
  return set;
}

template <PrimeOrderGroup G>
ShareSet<G> split_threshold(const typename G::Scalar& secret, std::size_t k, std::size_t n, Rng& rng) {
  if (k < 2 || k > n) throw ParameterError("split_threshold: need 2 <= k <= n");
  std::vector<typename G::Scalar> coeffs(k);
  coeffs[0] = secret;
  for (std::size_t j = 1; j < k; ++j) coeffs[j] = G::Scalar::random(rng);

  ShareSet<G> set{SharingParams::threshold_of(k, n), {}};
  set.shares.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const auto x = G::Scalar::from_u64(i);
    typename G::Scalar y{};
    for (std::size_t j = k; j-- > 0;) y = y * x + coeffs[j];
    set.shares.push_back({i, y});
  }
  return set;
}

template <PrimeOrderGroup G>
ShareSet<G> split(const typename G::Scalar& secret, const SharingParams& params, Rng& rng) {
  // A single party simply holds the secret.
  if (params.scheme == SharingScheme::additive && params.parties == 1) return {params, {{1, secret}}};
  return params.scheme == SharingScheme::additive ? split_additive<G>(secret, params.parties, rng)
                                                  : split_threshold<G>(secret, params.threshold, params.parties, rng);
}

/// Lagrange coefficients at zero for the given evaluation points.
template <PrimeOrderGroup G>
std::vector<typename G::Scalar> lagrange_at_zero(const std::vector<std::size_t>& parties) {
  std::vector<typename G::Scalar> out;
  out.reserve(parties.size());
  for (std::size_t a = 0; a < parties.size(); ++a) {
    auto num = G::Scalar::one();
    auto den = G::Scalar::one();
    const auto xa = G::Scalar::from_u64(parties[a]);
    for (std::size_t b = 0; b < parties.size(); ++b) {
      if (a == b) continue;
      const auto xb = G::Scalar::from_u64(parties[b]);
      num *= xb;
      den *= xb - xa;
    }
    out.push_back(num * den.inverse());
  }
  return out;
}

/// Weight each party applies to its own share so that the weighted shares
/// of `parties` sum to the secret.
template <PrimeOrderGroup G>
typename G::Scalar reconstruction_weight(const SharingParams& params, const std::vector<std::size_t>& parties,
                                         std::size_t party) {
  if (params.scheme == SharingScheme::additive) return G::Scalar::one();
  auto it = std::find(parties.begin(), parties.end(), party);
  if (it == parties.end()) throw ParameterError("reconstruction_weight: party not in set");
  return lagrange_at_zero<G>(parties)[static_cast<std::size_t>(it - parties.begin())];
}

namespace detail {
inline void check_party_set(const SharingParams& params, const std::vector<std::size_t>& parties) {
  std::vector<std::size_t> sorted = parties;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ParameterError("duplicate party index in share subset");
  for (auto p : sorted)
    if (p == 0 || p > params.parties) throw ParameterError("party index out of range: " + std::to_string(p));
  const std::size_t needed = params.scheme == SharingScheme::additive ? params.parties : params.threshold;
  if (sorted.size() < needed)
    throw InsufficientShares("have " + std::to_string(sorted.size()) + " shares, need " + std::to_string(needed));
}
}  // namespace detail

/// Reconstructs from the shares held by `subset` (1-based party indices).
template <PrimeOrderGroup G>
typename G::Scalar reconstruct(const ShareSet<G>& set, const std::vector<std::size_t>& subset) {
  detail::check_party_set(set.params, subset);
  std::vector<typename G::Scalar> values;
  for (auto p : subset) {
    auto it = std::find_if(set.shares.begin(), set.shares.end(), [&](const auto& s) { return s.party == p; });
    if (it == set.shares.end()) throw InsufficientShares("no share for party " + std::to_string(p));
    values.push_back(it->value);
  }
  typename G::Scalar out{};
  if (set.params.scheme == SharingScheme::additive) {
    for (const auto& v : values) out += v;
    return out;
  }
  const auto weights = lagrange_at_zero<G>(subset);
  for (std::size_t i = 0; i < values.size(); ++i) out += weights[i] * values[i];
  return out;
}

template <PrimeOrderGroup G>
typename G::Scalar reconstruct(const ShareSet<G>& set) {
  std::vector<std::size_t> all;
  for (const auto& s : set.shares) all.push_back(s.party);
  return reconstruct(set, all);
}

/// Combines per-share commitments into the commitment of the secret. For
/// threshold sharing the first `threshold` parties are interpolated.
template <PrimeOrderGroup G>
Commitment<G> combine_commitments(const SharingParams& params, const std::vector<Commitment<G>>& per_share) {
  if (per_share.size() != params.parties)
    throw ParameterError("combine_commitments: expected " + std::to_string(params.parties) + " commitments");
  Commitment<G> out{};
  if (params.scheme == SharingScheme::additive) {
    for (const auto& c : per_share) out *= c;
    return out;
  }
  std::vector<std::size_t> first;
  for (std::size_t i = 1; i <= params.threshold; ++i) first.push_back(i);
  const auto weights = lagrange_at_zero<G>(first);
  for (std::size_t i = 0; i < first.size(); ++i) out *= per_share[i].pow(weights[i]);
  return out;
}

template <PrimeOrderGroup G>
struct CommittedShares {
  ShareSet<G> values;
  ShareSet<G> blindings;
  std::vector<Commitment<G>> commitments;  // commitments[i] opens to (values[i], blindings[i])
};

template <PrimeOrderGroup G>
CommittedShares<G> share_with_commitments(const typename G::Scalar& secret, const typename G::Scalar& blinding,
                                          const SharingParams& params, Rng& rng) {
  CommittedShares<G> out{split<G>(secret, params, rng), split<G>(blinding, params, rng), {}};
  out.commitments.reserve(params.parties);
  for (std::size_t i = 0; i < params.parties; ++i)
    out.commitments.push_back(commit<G>(out.values.shares[i].value, out.blindings.shares[i].value));
  return out;
}

template <PrimeOrderGroup G>
CommittedShares<G> share_with_commitments(const typename G::Scalar& secret, const typename G::Scalar& blinding,
                                          std::size_t m, Rng& rng) {
  return share_with_commitments<G>(secret, blinding, SharingParams::additive(m), rng);
}

}  // namespace rialto
