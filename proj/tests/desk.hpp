#pragma once

// Trader-side helper: shares orders to an engine the way the runners do.

#include <map>
#include <vector>

#include "rialto/matching.hpp"
#include "rialto/mpc/engine.hpp"
#include "rialto/secret_sharing.hpp"

namespace desk {

using namespace rialto;

struct Intent {
  Side side = Side::buy;
  std::int64_t rate = 0;
  std::uint64_t round = 0;
};

template <PrimeOrderGroup G>
struct Order {
  OrderId id = 0;
  Intent intent;
  typename G::Scalar blinding{};
  typename G::Scalar rerand{};
  CommittedShares<G> rate;
  CommittedShares<G> rho;
};

template <PrimeOrderGroup G>
class Desk {
 public:
  using Scalar = typename G::Scalar;

  Desk(std::size_t brokers, SharingParams sharing, std::uint64_t seed,
       mpc::TransportKind transport = mpc::TransportKind::in_process)
      : rng_(seed), engine_(mpc::EngineConfig{brokers, sharing, transport}, Rng(seed).fork("engine")) {}

  explicit Desk(std::size_t brokers = 3, std::uint64_t seed = 1)
      : Desk(brokers, SharingParams::additive(brokers), seed) {}

  mpc::Engine<G>& engine() { return engine_; }
  void set_zero_rerand(bool on) { zero_rerand_ = on; }
  Rng& rng() { return rng_; }
  const std::map<OrderId, Order<G>>& orders() const { return orders_; }
  const Order<G>& order(OrderId id) const { return orders_.at(id); }

  OrderId add(Intent in, std::optional<OrderId> id = std::nullopt) {
    Order<G> o;
    o.id = id.value_or(next_id_);
    next_id_ = std::max(next_id_, o.id + 1);
    o.intent = in;
    o.blinding = Scalar::random(rng_);
    o.rerand = zero_rerand_ ? Scalar{} : Scalar::random(rng_);
    const auto& params = engine_.sharing();
    o.rate = share_with_commitments<G>(Scalar::from_i64(in.rate), o.blinding, params, rng_);
    o.rho = share_with_commitments<G>(o.rerand, Scalar::random(rng_), params, rng_);
    for (std::size_t i = 0; i < engine_.brokers(); ++i) {
      mpc::ShareBundle<G> b;
      b.order = o.id;
      b.party = i + 1;
      b.account = o.id;
      b.rate_share = o.rate.values.shares[i].value;
      b.rate_blinding_share = o.rate.blindings.shares[i].value;
      b.rerand_share = o.rho.values.shares[i].value;
      b.rerand_blinding_share = o.rho.blindings.shares[i].value;
      b.rate_commitment = o.rate.commitments[i];
      b.rerand_commitment = o.rho.commitments[i];
      engine_.deliver(i, b);
    }
    const auto out = o.id;
    orders_.emplace(out, std::move(o));
    return out;
  }

  Commitment<G> commitment(OrderId id) const {
    const auto& o = orders_.at(id);
    return commit<G>(Scalar::from_i64(o.intent.rate), o.blinding);
  }

  std::vector<mpc::SortItem> items() const {
    std::vector<mpc::SortItem> out;
    for (const auto& [id, o] : orders_) out.push_back({id, o.intent.side, o.intent.round});
    return out;
  }

  std::map<OrderId, std::vector<Commitment<G>>> share_commitments(mpc::ValidationKind kind) const {
    std::map<OrderId, std::vector<Commitment<G>>> out;
    for (const auto& [id, o] : orders_)
      out[id] = kind == mpc::ValidationKind::rate ? o.rate.commitments : o.rho.commitments;
    return out;
  }

  std::vector<OrderId> ids() const {
    std::vector<OrderId> out;
    for (const auto& [id, o] : orders_) out.push_back(id);
    return out;
  }

  // Plaintext oracle: (rate, sell first, round, id) ascending.
  std::vector<OrderId> plain_sort() const {
    auto all = ids();
    auto key = [&](OrderId id) {
      const auto& in = orders_.at(id).intent;
      return std::tuple(in.rate, in.side == Side::sell ? 0 : 1, in.round, id);
    };
    std::sort(all.begin(), all.end(), [&](OrderId a, OrderId b) { return key(a) < key(b); });
    return all;
  }

  SortedBook book(const std::vector<OrderId>& sorted) const {
    SortedBook b;
    for (auto id : sorted) b.push_back({id, orders_.at(id).intent.side});
    return b;
  }

 private:
  Rng rng_;
  mpc::Engine<G> engine_;
  std::map<OrderId, Order<G>> orders_;
  OrderId next_id_ = 1;
  bool zero_rerand_ = false;
};

struct RoundOutput {
  std::vector<OrderId> sorted;
  MatchSet matches;
  std::int64_t fee = 0;
  std::vector<std::int64_t> topk;
};

// sort, match, settle, reveal; the shuffle is left to the caller.
template <PrimeOrderGroup G>
RoundOutput run_round(Desk<G>& d, std::int64_t k) {
  RoundOutput out;
  out.sorted = d.engine().sorting_mpc(d.items());
  const auto book = d.book(out.sorted);
  out.matches = fair_swap(match_orders(book), book);
  out.fee = d.engine().settlement_mpc(out.matches).first.to_signed().value_or(0);
  out.topk = d.engine().topk_reveal(out.sorted, out.matches, k);
  return out;
}

}  // namespace desk
