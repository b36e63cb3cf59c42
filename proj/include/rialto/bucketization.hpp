#pragma once

#include <sodium.h>

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>

#include "rialto/crypto/opening_proof.hpp"
#include "rialto/crypto/range_proof.hpp"
#include "rialto/ledger/ledger.hpp"

namespace rialto {

/// Equal-width half-open buckets [offset + k*W, offset + (k+1)*W).
struct BucketGrid {
  std::int64_t width = 1;
  std::int64_t offset = 0;

  std::int64_t index_of(std::int64_t rate) const {
    const std::int64_t d = rate - offset;
    return d >= 0 ? d / width : -((-d + width - 1) / width);
  }
  std::int64_t floor_of(std::int64_t index) const { return offset + index * width; }
  std::int64_t ceiling_of(std::int64_t index) const { return floor_of(index) + width; }
  bool contains(std::int64_t index, std::int64_t rate) const {
    return rate >= floor_of(index) && rate < ceiling_of(index);
  }

  friend bool operator==(const BucketGrid&, const BucketGrid&) = default;
};

/// Offset drawn from the block hash, so nobody picks it.
inline BucketGrid choose_buckets(std::int64_t width, const Digest256& block_hash) {
  if (width < 1) throw ParameterError("choose_buckets: width must be at least 1");
  Bytes material;
  for (char c : std::string_view("rialto/buckets")) material.push_back(static_cast<std::uint8_t>(c));
  material.insert(material.end(), block_hash.begin(), block_hash.end());
  Rng rng(sha256(material));
  return {width, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(width)))};
}

/// Bits needed so that [0, 2^bits) covers [0, W).
inline std::size_t bucket_proof_bits(std::int64_t width) {
  std::size_t bits = 1;
  while ((std::int64_t{1} << bits) < width) ++bits;
  return bits;
}

template <PrimeOrderGroup G>
struct BucketProof {
  RangeProof<G> above_floor;    // rate - floor in range
  RangeProof<G> below_ceiling;  // floor + W - 1 - rate in range
};

template <PrimeOrderGroup G>
struct BucketClaim {
  std::int64_t index = 0;
  BucketProof<G> proof;
};

template <PrimeOrderGroup G>
BucketClaim<G> assign_bucket(std::int64_t rate, const typename G::Scalar& blinding, const Commitment<G>& c,
                             const BucketGrid& grid, std::string_view context, Rng& rng) {
  if (commit<G>(rate, blinding) != c) throw ParameterError("assign_bucket: rate and blinding do not open the commitment");
  BucketClaim<G> claim;
  claim.index = grid.index_of(rate);
  const auto bits = bucket_proof_bits(grid.width);
  const std::int64_t lo = grid.floor_of(claim.index);
  const std::int64_t hi = grid.ceiling_of(claim.index) - 1;
  claim.proof.above_floor = prove_range<G>(rate - lo, blinding, bits, context, rng);
  claim.proof.below_ceiling = prove_range<G>(hi - rate, -blinding, bits, context, rng);
  return claim;
}

template <PrimeOrderGroup G>
bool verify_bucket(const Commitment<G>& c, const BucketGrid& grid, std::int64_t index, const BucketProof<G>& proof,
                   std::string_view context) {
  const auto bits = bucket_proof_bits(grid.width);
  const std::int64_t lo = grid.floor_of(index);
  const std::int64_t hi = grid.ceiling_of(index) - 1;
  return verify_range<G>(c / commit_public<G>(lo), proof.above_floor, bits, context) &&
         verify_range<G>(commit_public<G>(hi) / c, proof.below_ceiling, bits, context);
}

/// Static per-order keys for the counterparty exchange.
struct TraderKeys {
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> sign_pk{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sign_sk{};
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> box_pk{};
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> box_sk{};

  static TraderKeys generate(Rng& rng) {
    detail::sodium_ready();
    TraderKeys k;
    std::array<std::uint8_t, 32> seed{};
    rng.fill(seed);
    crypto_sign_seed_keypair(k.sign_pk.data(), k.sign_sk.data(), seed.data());
    rng.fill(seed);
    crypto_box_seed_keypair(k.box_pk.data(), k.box_sk.data(), seed.data());
    return k;
  }
};

/// A signed (rate, blinding) claim as the counterparty received it.
struct SignedOpening {
  OrderId order = 0;
  std::int64_t rate = 0;
  Bytes blinding;  // scalar encoding
  Bytes message;
  std::array<std::uint8_t, crypto_sign_BYTES> signature{};
};

template <PrimeOrderGroup G>
Bytes opening_message(OrderId order, std::int64_t rate, const typename G::Scalar& blinding) {
  Bytes msg;
  for (char c : std::string_view("rialto/opening")) msg.push_back(static_cast<std::uint8_t>(c));
  put_u64_be(msg, order);
  put_u64_be(msg, static_cast<std::uint64_t>(rate));
  const auto enc = blinding.to_bytes();
  msg.insert(msg.end(), enc.begin(), enc.end());
  return msg;
}

/// Sign, then seal to the recipient's box key. Same wire format as
/// crypto_box_seal, but the ephemeral key comes from `rng` so runs replay.
template <PrimeOrderGroup G>
Bytes seal_opening(OrderId order, std::int64_t rate, const typename G::Scalar& blinding, const TraderKeys& sender,
                   const std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES>& recipient, Rng& rng) {
  Bytes plain = opening_message<G>(order, rate, blinding);
  std::array<std::uint8_t, crypto_sign_BYTES> sig{};
  crypto_sign_detached(sig.data(), nullptr, plain.data(), plain.size(), sender.sign_sk.data());
  plain.insert(plain.end(), sig.begin(), sig.end());
  std::array<std::uint8_t, crypto_box_SEEDBYTES> seed{};
  rng.fill(seed);
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> epk{};
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> esk{};
  crypto_box_seed_keypair(epk.data(), esk.data(), seed.data());
  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, nonce.size());
  crypto_generichash_update(&st, epk.data(), epk.size());
  crypto_generichash_update(&st, recipient.data(), recipient.size());
  crypto_generichash_final(&st, nonce.data(), nonce.size());
  Bytes sealed(plain.size() + crypto_box_SEALBYTES);
  std::copy(epk.begin(), epk.end(), sealed.begin());
  const int rc =
      crypto_box_easy(sealed.data() + epk.size(), plain.data(), plain.size(), nonce.data(), recipient.data(), esk.data());
  sodium_memzero(esk.data(), esk.size());
  if (rc != 0) throw ParameterError("seal: recipient key rejected");
  return sealed;
}

template <PrimeOrderGroup G>
std::optional<SignedOpening> open_sealed(const Bytes& sealed, const TraderKeys& recipient,
                                         const std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES>& sender_pk) {
  if (sealed.size() < crypto_box_SEALBYTES) return std::nullopt;
  Bytes plain(sealed.size() - crypto_box_SEALBYTES);
  if (crypto_box_seal_open(plain.data(), sealed.data(), sealed.size(), recipient.box_pk.data(),
                           recipient.box_sk.data()) != 0)
    return std::nullopt;
  constexpr std::size_t prefix = std::string_view("rialto/opening").size();
  const std::size_t msg_len = prefix + 16 + G::Scalar::kBytes;
  if (plain.size() != msg_len + crypto_sign_BYTES) return std::nullopt;
  SignedOpening out;
  out.message.assign(plain.begin(), plain.begin() + static_cast<std::ptrdiff_t>(msg_len));
  std::copy(plain.begin() + static_cast<std::ptrdiff_t>(msg_len), plain.end(), out.signature.begin());
  if (crypto_sign_verify_detached(out.signature.data(), out.message.data(), out.message.size(), sender_pk.data()) != 0)
    return std::nullopt;
  out.order = read_u64_be(std::span(out.message).subspan(prefix));
  out.rate = static_cast<std::int64_t>(read_u64_be(std::span(out.message).subspan(prefix + 8)));
  out.blinding.assign(out.message.begin() + static_cast<std::ptrdiff_t>(prefix + 16), out.message.end());
  return out;
}

/// True when the signed claim is authentic and does not open `c`.
template <PrimeOrderGroup G>
bool is_valid_deviation(const SignedOpening& evidence, const std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES>& pk,
                        const Commitment<G>& c) {
  if (crypto_sign_verify_detached(evidence.signature.data(), evidence.message.data(), evidence.message.size(),
                                  pk.data()) != 0)
    return false;
  auto blinding = G::Scalar::from_bytes(evidence.blinding);
  if (!blinding) return true;  // signed garbage is a deviation too
  return commit<G>(evidence.rate, *blinding) != c;
}

enum class SettlementScheme { difference, mean };

/// One side of a matched pair as its trader knows it. `claimed_*` is what
/// the trader actually sends; honest traders send their real opening.
template <PrimeOrderGroup G>
struct PairParty {
  OrderId order = 0;
  std::int64_t rate = 0;
  typename G::Scalar blinding{};
  TraderKeys keys;
  std::optional<std::int64_t> claimed_rate;
};

struct DeviationPenalty {
  std::int64_t seller_fine = 0;  // buyers forfeit their escrow
};

struct PairOutcome {
  bool settled = false;
  std::optional<OrderId> cheater;
  std::int64_t fee = 0;          // marketplace income
  std::int64_t settle_rate = 0;  // seller's credit
};

namespace detail {

// Exchanges sealed openings; returns the first party caught lying.
template <PrimeOrderGroup G>
std::optional<OrderId> exchange_openings(Ledger<G>& ledger, const PairParty<G>& buyer, const PairParty<G>& seller,
                                         const DeviationPenalty& penalty, Rng& rng) {
  const auto& cb = ledger.order(buyer.order).rate;
  const auto& cs = ledger.order(seller.order).rate;
  const Bytes to_seller =
      seal_opening<G>(buyer.order, buyer.claimed_rate.value_or(buyer.rate), buyer.blinding, buyer.keys, seller.keys.box_pk,
                      rng);
  const Bytes to_buyer =
      seal_opening<G>(seller.order, seller.claimed_rate.value_or(seller.rate), seller.blinding, seller.keys, buyer.keys.box_pk,
                      rng);
  Event e;
  e["type"] = "openings_exchanged";
  e["buy"] = buyer.order;
  e["sell"] = seller.order;
  e["to_seller"] = to_hex(to_seller);
  e["to_buyer"] = to_hex(to_buyer);
  ledger.record(std::move(e));

  auto report = [&](const PairParty<G>& accused, const std::optional<SignedOpening>& evidence, const Commitment<G>& c,
                    const PairParty<G>& victim) -> std::optional<OrderId> {
    if (!evidence || !is_valid_deviation<G>(*evidence, accused.keys.sign_pk, c)) return std::nullopt;
    Event d;
    d["type"] = "deviation_reported";
    d["accused"] = accused.order;
    d["message"] = to_hex(evidence->message);
    d["signature"] = to_hex(evidence->signature);
    ledger.record(std::move(d));
    const bool accused_is_seller = ledger.order(accused.order).side == Side::sell;
    ledger.penalize(accused.order, accused_is_seller ? penalty.seller_fine : 0);
    ledger.refund_order(victim.order, "counterparty deviation");
    return accused.order;
  };

  if (auto c = report(seller, open_sealed<G>(to_buyer, buyer.keys, seller.keys.sign_pk), cs, buyer)) return c;
  if (auto c = report(buyer, open_sealed<G>(to_seller, seller.keys, buyer.keys.sign_pk), cb, seller)) return c;
  return std::nullopt;
}

inline std::string pair_context(const MatchPair& p) {
  return "pair/" + std::to_string(p.buy) + "/" + std::to_string(p.sell);
}

}  // namespace detail

/// Both sides settle at their own rates; the marketplace keeps the gap.
template <PrimeOrderGroup G>
PairOutcome settle_difference(Ledger<G>& ledger, const PairParty<G>& buyer, const PairParty<G>& seller,
                              const DeviationPenalty& penalty, Rng& rng) {
  const MatchPair pair{buyer.order, seller.order};
  if (auto cheat = detail::exchange_openings(ledger, buyer, seller, penalty, rng)) return {false, cheat, 0, 0};
  const std::int64_t fee = buyer.rate - seller.rate;
  const auto quotient = ledger.order(buyer.order).rate / ledger.order(seller.order).rate;
  const auto ctx = detail::pair_context(pair);
  const auto proof = prove_blinding<G>(buyer.blinding - seller.blinding, (quotient / commit_public<G>(fee)).element, ctx, rng);
  ledger.settle_pair_difference(pair, fee, proof, ctx);
  return {true, std::nullopt, fee, seller.rate};
}

/// Both sides settle at the mean; an odd unit goes to the marketplace.
template <PrimeOrderGroup G>
PairOutcome settle_mean(Ledger<G>& ledger, const PairParty<G>& buyer, const PairParty<G>& seller,
                        const DeviationPenalty& penalty, Rng& rng) {
  const MatchPair pair{buyer.order, seller.order};
  if (auto cheat = detail::exchange_openings(ledger, buyer, seller, penalty, rng)) return {false, cheat, 0, 0};
  const std::int64_t sum = buyer.rate + seller.rate;
  const std::int64_t remainder = sum % 2;
  const std::int64_t settle = (sum - remainder) / 2;
  const auto half = G::Scalar::from_u64(2).inverse();
  const auto ctx = detail::pair_context(pair);
  const auto proof =
      prove_range<G>(settle, (buyer.blinding + seller.blinding) * half, ledger.config().n_bits, ctx, rng);
  ledger.settle_pair_mean(pair, remainder, proof, ctx);
  return {true, std::nullopt, remainder, settle};
}

}  // namespace rialto
