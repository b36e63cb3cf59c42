#pragma once

#include "rialto/crypto/pedersen.hpp"
#include "rialto/mpc/frames.hpp"
#include "rialto/types.hpp"

namespace rialto::mpc {

/// What one broker learns about one order.
template <PrimeOrderGroup G>
struct ShareBundle {
  using Scalar = typename G::Scalar;

  OrderId order = 0;
  std::size_t party = 0;  // 1-based share index
  AccountSlot account = 0;
  Scalar rate_share{};
  Scalar rate_blinding_share{};
  Scalar rerand_share{};           // share of the re-randomization blinding
  Scalar rerand_blinding_share{};  // hides rerand_share in its public commitment
  Commitment<G> rate_commitment{};    // g^rate_share h^rate_blinding_share
  Commitment<G> rerand_commitment{};  // g^rerand_share h^rerand_blinding_share

  void write(Writer& w) const {
    w.u64(order).u64(party).u64(account);
    w.template scalar<G>(rate_share).template scalar<G>(rate_blinding_share);
    w.template scalar<G>(rerand_share).template scalar<G>(rerand_blinding_share);
    w.template element<G>(rate_commitment.element).template element<G>(rerand_commitment.element);
  }

  static ShareBundle read(Reader& r) {
    ShareBundle b;
    b.order = r.u64();
    b.party = r.u64();
    b.account = r.u64();
    b.rate_share = r.template scalar<G>();
    b.rate_blinding_share = r.template scalar<G>();
    b.rerand_share = r.template scalar<G>();
    b.rerand_blinding_share = r.template scalar<G>();
    b.rate_commitment = {r.template element<G>()};
    b.rerand_commitment = {r.template element<G>()};
    return b;
  }
};

enum class ValidationKind : std::uint8_t { rate, rerandomization };

}  // namespace rialto::mpc
