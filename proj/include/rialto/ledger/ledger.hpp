#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rialto/crypto/opening_proof.hpp"
#include "rialto/crypto/range_proof.hpp"
#include "rialto/ledger/chain.hpp"
#include "rialto/matching.hpp"
#include "rialto/secret_sharing.hpp"
#include "rialto/types.hpp"

namespace rialto {

enum class EscrowState { locked, settled, refunded, forfeited };

inline std::string_view to_string(EscrowState s) {
  switch (s) {
    case EscrowState::locked: return "locked";
    case EscrowState::settled: return "settled";
    case EscrowState::refunded: return "refunded";
    case EscrowState::forfeited: return "forfeited";
  }
  return "?";
}

/// Simulated marketplace contract. Balances and rates are commitments; in
/// test mode every commitment also carries the opening the contract would
/// never see in production, so conservation can be checked exactly.
template <PrimeOrderGroup G>
class Ledger {
 public:
  using Scalar = typename G::Scalar;
  using Comm = Commitment<G>;
  using Open = Opening<G>;

  struct Config {
    std::size_t n_bits = kDefaultRangeBits;
    bool test_mode = false;
  };

  struct Account {
    Comm balance;
    std::optional<Open> tracked;
    bool flagged = false;
  };

  struct Order {
    OrderId id = 0;
    Side side = Side::buy;
    AccountSlot account = 0;
    SharingParams sharing;
    std::vector<Comm> share_commitments;
    std::vector<Comm> rerand_commitments;
    Comm rate;
    std::uint64_t round = 0;
    std::uint64_t unmatched_rounds = 0;
    bool open = true;
    bool needs_relink = false;
    std::optional<Open> tracked_rate;
  };

  struct Escrow {
    Comm amount;
    EscrowState state = EscrowState::locked;
    std::optional<Open> tracked;
  };

  struct Submission {
    Side side = Side::buy;
    AccountSlot account = 0;
    SharingParams sharing = SharingParams::additive(1);
    std::vector<Comm> share_commitments;   // one per broker, or a single rate commitment
    std::vector<Comm> rerand_commitments;  // may be empty outside Rialto
    std::optional<RangeProof<G>> balance_proof;
    std::optional<Open> tracked_rate;  // test mode only
  };

  Ledger() : Ledger(Config{}) {}
  explicit Ledger(Config config) : config_(config) {
    if (config_.test_mode) marketplace_.tracked = Open{};
  }

  const Config& config() const { return config_; }
  std::uint64_t round() const { return round_; }
  Chain& chain() { return chain_; }
  const Chain& chain() const { return chain_; }

  static std::string balance_proof_context(AccountSlot slot, std::uint64_t round) {
    return "balance/" + std::to_string(slot) + "/" + std::to_string(round);
  }
  static std::string relink_context(OrderId id, AccountSlot slot) {
    return "relink/" + std::to_string(id) + "/" + std::to_string(slot);
  }

  AccountSlot open_account(const Comm& balance, std::optional<Open> tracked = std::nullopt) {
    if (config_.test_mode) {
      if (!tracked || !tracked->opens(balance)) throw LedgerRejection("test mode: account needs a valid opening");
    } else {
      tracked.reset();
    }
    accounts_.push_back({balance, tracked, false});
    Event e;
    e["type"] = "account_opened";
    e["account"] = accounts_.size() - 1;
    e["balance"] = balance.hex();
    chain_.record(std::move(e));
    return accounts_.size() - 1;
  }

  void begin_round(std::uint64_t round) {
    round_ = round;
    submitted_this_round_.clear();
  }

  std::size_t account_count() const { return accounts_.size(); }
  const Account& account(AccountSlot slot) const { return accounts_.at(slot); }
  const Account& marketplace() const { return marketplace_; }
  const std::map<OrderId, Order>& orders() const { return orders_; }
  const Order& order(OrderId id) const { return orders_.at(id); }
  const std::map<OrderId, Escrow>& escrows() const { return escrows_; }

  std::vector<OrderId> open_orders() const {
    std::vector<OrderId> out;
    for (const auto& [id, o] : orders_)
      if (o.open) out.push_back(id);
    return out;
  }

  OrderId submit_order(const Submission& sub) {
    if (sub.account >= accounts_.size()) throw LedgerRejection("unknown account " + std::to_string(sub.account));
    if (submitted_this_round_.count(sub.account) || has_open_order(sub.account))
      throw LedgerRejection("account " + std::to_string(sub.account) + " already has an order this round");
    if (sub.share_commitments.empty()) throw LedgerRejection("order carries no rate commitment");

    Order o;
    o.id = next_order_++;
    o.side = sub.side;
    o.account = sub.account;
    o.round = round_;
    o.share_commitments = sub.share_commitments;
    o.rerand_commitments = sub.rerand_commitments;
    if (sub.share_commitments.size() == 1) {
      o.sharing = SharingParams::additive(1);
      o.rate = sub.share_commitments.front();
    } else {
      o.sharing = sub.sharing;
      o.rate = combine_commitments<G>(sub.sharing, sub.share_commitments);
    }
    if (config_.test_mode) {
      if (!sub.tracked_rate || !sub.tracked_rate->opens(o.rate))
        throw LedgerRejection("test mode: order needs a valid rate opening");
      o.tracked_rate = sub.tracked_rate;
    }

    Account& acct = accounts_[sub.account];
    if (o.side == Side::buy) {
      if (!sub.balance_proof) throw LedgerRejection("buy order without balance proof");
      const Comm remaining = acct.balance / o.rate;
      if (!verify_range<G>(remaining, *sub.balance_proof, config_.n_bits,
                           balance_proof_context(sub.account, round_)))
        throw LedgerRejection("balance range proof rejected for account " + std::to_string(sub.account));
      acct.balance = remaining;
      if (acct.tracked) *acct.tracked -= *o.tracked_rate;
      escrows_[o.id] = {o.rate, EscrowState::locked, o.tracked_rate};
    }
    submitted_this_round_.insert(sub.account);

    Event e;
    e["type"] = "order_accepted";
    e["order"] = o.id;
    e["side"] = std::string(to_string(o.side));
    e["account"] = o.account;
    e["round"] = o.round;
    e["rate_commitment"] = o.rate.hex();
    chain_.record(std::move(e));
    const OrderId id = o.id;
    orders_.emplace(id, std::move(o));
    return id;
  }

  void record(Event e) { chain_.record(std::move(e)); }

  /// Applies a Rialto round's matches given the brokers' aggregate opening.
  void apply_settlement(const MatchSet& pairs, const Scalar& fee, const Scalar& blinding) {
    if (pairs.empty()) return;
    Comm expected{};
    for (const auto& p : pairs) {
      check_pair(p);
      expected *= orders_.at(p.buy).rate / orders_.at(p.sell).rate;
    }
    if (commit<G>(fee, blinding) != expected)
      throw LedgerRejection("settlement rejected: aggregate fee does not open the commitment quotient");

    Open fee_open{};
    for (const auto& p : pairs) {
      credit_seller(p.sell, orders_.at(p.sell).rate);
      consume_escrow(p.buy, EscrowState::settled);
      close_order(p.buy);
      close_order(p.sell);
      if (config_.test_mode)
        fee_open += *orders_.at(p.buy).tracked_rate - *orders_.at(p.sell).tracked_rate;
    }
    credit_marketplace(commit<G>(fee, blinding), fee_open);

    Event e;
    e["type"] = "settlement_recorded";
    e["pairs"] = pairs.size();
    e["fee_total"] = fee.to_signed() ? nlohmann::ordered_json(*fee.to_signed()) : nlohmann::ordered_json(nullptr);
    e["fee_commitment"] = commit<G>(fee, blinding).hex();
    chain_.record(std::move(e));
  }

  /// Per-pair settlement at proposed rates with a public fee.
  void settle_pair_difference(const MatchPair& p, std::int64_t fee, const BlindingProof<G>& proof,
                              std::string_view context) {
    check_pair(p);
    const Comm quotient = orders_.at(p.buy).rate / orders_.at(p.sell).rate;
    if (!verify_public_value<G>(quotient, fee, proof, context))
      throw LedgerRejection("fee proof rejected for pair " + std::to_string(p.buy) + "/" + std::to_string(p.sell));
    credit_seller(p.sell, orders_.at(p.sell).rate);
    consume_escrow(p.buy, EscrowState::settled);
    Open fee_open{};
    if (config_.test_mode) fee_open = *orders_.at(p.buy).tracked_rate - *orders_.at(p.sell).tracked_rate;
    credit_marketplace(quotient, fee_open);
    close_order(p.buy);
    close_order(p.sell);
    Event e;
    e["type"] = "settlement_recorded";
    e["scheme"] = "difference";
    e["buy"] = p.buy;
    e["sell"] = p.sell;
    e["fee"] = fee;
    chain_.record(std::move(e));
  }

  /// Settlement commitment of the mean scheme: (C_b C_s / g^rem)^(1/2).
  static Comm mean_commitment(const Comm& buy, const Comm& sell, std::int64_t remainder) {
    const Scalar half = Scalar::from_u64(2).inverse();
    return (buy * sell / commit_public<G>(remainder)).pow(half);
  }

  /// Both sides settle at the (floored) mean; the odd remainder goes to the
  /// marketplace and the buyer's excess is refunded.
  void settle_pair_mean(const MatchPair& p, std::int64_t remainder, const RangeProof<G>& settle_proof,
                        std::string_view context) {
    check_pair(p);
    if (remainder != 0 && remainder != 1) throw LedgerRejection("mean settlement remainder must be 0 or 1");
    const Comm& cb = orders_.at(p.buy).rate;
    const Comm& cs = orders_.at(p.sell).rate;
    const Comm settle = mean_commitment(cb, cs, remainder);
    if (!verify_range<G>(settle, settle_proof, config_.n_bits, context))
      throw LedgerRejection("mean settlement proof rejected");
    const Comm refund = cb / settle / commit_public<G>(remainder);

    Open settle_open{}, refund_open{};
    if (config_.test_mode) {
      const auto& ob = *orders_.at(p.buy).tracked_rate;
      const auto& os = *orders_.at(p.sell).tracked_rate;
      const Scalar half = Scalar::from_u64(2).inverse();
      settle_open = {(ob.value + os.value - remainder) / 2, (ob.blinding + os.blinding) * half};
      refund_open = ob - settle_open - Open{remainder, Scalar{}};
    }
    credit(accounts_[orders_.at(p.sell).account], settle, settle_open);
    credit(accounts_[orders_.at(p.buy).account], refund, refund_open);
    consume_escrow(p.buy, EscrowState::settled);
    credit_marketplace(commit_public<G>(remainder), Open{remainder, Scalar{}});
    close_order(p.buy);
    close_order(p.sell);
    Event e;
    e["type"] = "settlement_recorded";
    e["scheme"] = "mean";
    e["buy"] = p.buy;
    e["sell"] = p.sell;
    e["remainder"] = remainder;
    chain_.record(std::move(e));
  }

  /// Drops an open order; a buy escrow goes back to its account.
  void refund_order(OrderId id, std::string_view reason) {
    auto& o = orders_.at(id);
    if (!o.open) throw LedgerRejection("order " + std::to_string(id) + " is not open");
    if (o.side == Side::buy) refund_escrow(id);
    close_order(id);
    Event e;
    e["type"] = "order_dropped";
    e["order"] = id;
    e["reason"] = std::string(reason);
    chain_.record(std::move(e));
  }

  /// Flags a cheating order's account. A buyer forfeits its escrow to the
  /// marketplace; `fine` additionally moves a public amount.
  void penalize(OrderId id, std::int64_t fine = 0) {
    auto& o = orders_.at(id);
    Account& acct = accounts_.at(o.account);
    acct.flagged = true;
    if (o.side == Side::buy) {
      auto& esc = escrows_.at(id);
      if (esc.state != EscrowState::locked) throw LedgerRejection("escrow already released");
      esc.state = EscrowState::forfeited;
      credit_marketplace(esc.amount, esc.tracked.value_or(Open{}));
    }
    if (fine != 0) {
      credit(acct, commit_public<G>(-fine), Open{-fine, Scalar{}});
      credit_marketplace(commit_public<G>(fine), Open{fine, Scalar{}});
    }
    if (o.open) close_order(id);
    Event e;
    e["type"] = "penalty_applied";
    e["order"] = id;
    e["account"] = o.account;
    e["fine"] = fine;
    chain_.record(std::move(e));
  }

  /// Swaps in re-randomized, shuffled commitments for `slots`. In test mode
  /// the openings of the new list must be supplied and are checked.
  void replace_accounts(const std::vector<AccountSlot>& slots, const std::vector<Comm>& fresh,
                        const std::optional<std::vector<Open>>& tracked = std::nullopt) {
    if (slots.size() != fresh.size())
      throw LedgerRejection("replace_accounts: " + std::to_string(fresh.size()) + " commitments for " +
                            std::to_string(slots.size()) + " accounts");
    std::set<AccountSlot> uniq(slots.begin(), slots.end());
    if (uniq.size() != slots.size()) throw LedgerRejection("replace_accounts: duplicate slot");
    for (auto s : slots)
      if (s >= accounts_.size()) throw LedgerRejection("replace_accounts: unknown slot");
    if (config_.test_mode) {
      if (!tracked || tracked->size() != slots.size())
        throw LedgerRejection("test mode: replacement needs openings");
      std::multiset<std::int64_t> before, after;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        before.insert(accounts_[slots[i]].tracked->value);
        if (!(*tracked)[i].opens(fresh[i])) throw LedgerRejection("test mode: opening does not match");
        after.insert((*tracked)[i].value);
      }
      if (before != after) throw LedgerRejection("replace_accounts: balance multiset changed");
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      accounts_[slots[i]].balance = fresh[i];
      if (config_.test_mode) accounts_[slots[i]].tracked = (*tracked)[i];
    }
    for (auto& [id, o] : orders_)
      if (o.open && uniq.count(o.account)) o.needs_relink = true;
    Event e;
    e["type"] = "accounts_replaced";
    e["slots"] = slots;
    auto& list = e["commitments"];
    list = nlohmann::ordered_json::array();
    for (const auto& c : fresh) list.push_back(c.hex());
    chain_.record(std::move(e));
  }

  /// Points a carried-over order at its owner's account after a shuffle.
  void relink_order(OrderId id, AccountSlot slot, const OpeningProof<G>& proof) {
    auto& o = orders_.at(id);
    if (!o.open) throw LedgerRejection("relink: order closed");
    if (slot >= accounts_.size()) throw LedgerRejection("relink: unknown slot");
    if (!verify_opening<G>(accounts_[slot].balance, proof, relink_context(id, slot)))
      throw LedgerRejection("relink: opening proof rejected");
    o.account = slot;
    o.needs_relink = false;
  }

  /// Ages unmatched orders and expels those unmatched for more than
  /// `max_rounds` rounds, refunding buy escrows to the current account.
  std::vector<OrderId> expire_orders(std::uint64_t max_rounds) {
    std::vector<OrderId> expelled;
    for (auto& [id, o] : orders_) {
      if (!o.open) continue;
      ++o.unmatched_rounds;
      if (o.unmatched_rounds > max_rounds) expelled.push_back(id);
    }
    for (auto id : expelled) {
      if (orders_.at(id).side == Side::buy) refund_escrow(id);
      close_order(id);
    }
    if (!expelled.empty()) {
      Event e;
      e["type"] = "orders_expired";
      e["orders"] = expelled;
      chain_.record(std::move(e));
    }
    return expelled;
  }

  const Block& seal_block() { return chain_.seal(); }

  // --- test-mode audit ---

  /// Sum of every tracked value: accounts, marketplace and locked escrow.
  std::int64_t tracked_total() const {
    if (!config_.test_mode) throw LedgerRejection("tracked_total needs test mode");
    std::int64_t total = marketplace_.tracked->value;
    for (const auto& a : accounts_) total += a.tracked->value;
    for (const auto& [id, esc] : escrows_)
      if (esc.state == EscrowState::locked) total += esc.tracked->value;
    return total;
  }

  bool tracked_consistent() const {
    if (!config_.test_mode) return true;
    if (!marketplace_.tracked->opens(marketplace_.balance)) return false;
    for (const auto& a : accounts_)
      if (!a.tracked->opens(a.balance)) return false;
    for (const auto& [id, esc] : escrows_)
      if (!esc.tracked->opens(esc.amount)) return false;
    return true;
  }

 private:
  bool has_open_order(AccountSlot slot) const {
    for (const auto& [id, o] : orders_)
      if (o.open && o.account == slot) return true;
    return false;
  }

  void check_pair(const MatchPair& p) const {
    auto b = orders_.find(p.buy);
    auto s = orders_.find(p.sell);
    if (b == orders_.end() || s == orders_.end()) throw LedgerRejection("settlement names an unknown order");
    if (b->second.side != Side::buy || s->second.side != Side::sell)
      throw LedgerRejection("settlement pair has wrong sides");
    if (!b->second.open || !s->second.open) throw LedgerRejection("settlement names a closed order");
    if (escrows_.at(p.buy).state != EscrowState::locked)
      throw LedgerRejection("escrow of order " + std::to_string(p.buy) + " already released");
  }

  void credit(Account& acct, const Comm& amount, const Open& opening) {
    acct.balance *= amount;
    if (acct.tracked) *acct.tracked += opening;
  }

  void credit_seller(OrderId sell, const Comm& amount) {
    const auto& o = orders_.at(sell);
    credit(accounts_.at(o.account), amount, o.tracked_rate.value_or(Open{}));
  }

  void credit_marketplace(const Comm& amount, const Open& opening) { credit(marketplace_, amount, opening); }

  void consume_escrow(OrderId id, EscrowState to) {
    auto& esc = escrows_.at(id);
    if (esc.state != EscrowState::locked) throw LedgerRejection("escrow double spend on order " + std::to_string(id));
    esc.state = to;
  }

  void refund_escrow(OrderId id) {
    if (orders_.at(id).needs_relink)
      throw LedgerRejection("order " + std::to_string(id) + " must be relinked before its escrow is refunded");
    auto& esc = escrows_.at(id);
    consume_escrow(id, EscrowState::refunded);
    credit(accounts_.at(orders_.at(id).account), esc.amount, esc.tracked.value_or(Open{}));
  }

  void close_order(OrderId id) { orders_.at(id).open = false; }

  Config config_;
  Chain chain_;
  std::vector<Account> accounts_;
  Account marketplace_;
  std::map<OrderId, Order> orders_;
  std::map<OrderId, Escrow> escrows_;
  std::set<AccountSlot> submitted_this_round_;
  std::uint64_t round_ = 0;
  OrderId next_order_ = 1;
};

}  // namespace rialto
