#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "rialto/bucketization.hpp"
#include "rialto/ledger/ledger.hpp"
#include "rialto/matching.hpp"
#include "rialto/mpc/engine.hpp"
#include "rialto/privacy.hpp"
#include "rialto/sim/config.hpp"
#include "rialto/sim/metrics.hpp"
#include "rialto/sim/orders.hpp"

namespace rialto::sim {

class ProtocolRunner {
 public:
  virtual ~ProtocolRunner() = default;
  virtual RoundMetrics run_round(std::uint64_t round, const std::vector<Intent>& intents) = 0;
  virtual const Chain& chain() const = 0;
  virtual const mpc::LeakageLog* leakage() const { return nullptr; }
  /// Sum of all balances, escrows and fees; empty when not observable.
  virtual std::optional<std::int64_t> conserved_total() const = 0;
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// Distinct idle traders for the round's intents, in intent order. Intents
/// beyond the idle pool are dropped.
inline std::vector<std::size_t> assign_traders(const std::vector<bool>& busy, std::size_t wanted,
                                               const ExperimentConfig& c, std::uint64_t round) {
  std::vector<std::size_t> idle;
  for (std::size_t i = 0; i < busy.size(); ++i)
    if (!busy[i]) idle.push_back(i);
  Rng rng = Rng(c.seed).fork("assign", round);
  const std::size_t n = std::min(wanted, idle.size());
  for (std::size_t i = 0; i < n; ++i) std::swap(idle[i], idle[i + rng.below(idle.size() - i)]);
  idle.resize(n);
  return idle;
}

/// Order among equal rates matches the MPC sort: sells first, older first.
struct SortKey {
  std::int64_t rate;
  int side;
  std::uint64_t round;
  OrderId id;
  auto operator<=>(const SortKey&) const = default;
};
inline SortKey sort_key(std::int64_t rate, Side side, std::uint64_t round, OrderId id) {
  return {rate, side == Side::sell ? 0 : 1, round, id};
}

inline GaussianParams sample_params(const std::vector<double>& rates) {
  const double n = static_cast<double>(rates.size());
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
  double ss = 0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  return {mean, std::sqrt(ss / std::max(1.0, n - 1.0))};
}

template <class F>
std::optional<double> try_gain(F&& f) {
  try {
    return f();
  } catch (const InsufficientData&) {
  } catch (const UndefinedGain&) {
  } catch (const ParameterError&) {
  }
  return std::nullopt;
}

/// Broker and trader views of a round whose ascending book is `rates_asc`.
inline void rank_privacy(RoundMetrics& m, const std::vector<double>& rates_asc, const ExperimentConfig& c,
                         std::uint64_t round) {
  if (rates_asc.size() < 2) return;
  const auto truth = sample_params(rates_asc);
  m.true_mean = truth.mean;
  m.true_sigma = truth.sigma;
  LeakageView view;
  view.order_count = rates_asc.size();
  for (auto r : m.topk) view.top_rates.push_back(static_cast<double>(r));
  m.gain_broker = try_gain([&] { return privacy_gain(estimate_params(view), truth); });
  Rng rng = Rng(c.seed).fork("viewer", round);
  const auto pos = static_cast<std::size_t>(rng.below(rates_asc.size()));
  view.own = RankedRate{rates_asc.size() - pos, rates_asc[pos]};
  m.gain_trader = try_gain([&] { return privacy_gain(estimate_params(view), truth); });
}

}  // namespace detail

/// Protocols whose rates are plaintext somewhere: no commitments, just
/// integer balances. Matching is identical to the private protocols.
class PlainRunner final : public ProtocolRunner {
 public:
  explicit PlainRunner(ExperimentConfig c)
      : c_(std::move(c)), balances_(c_.trader_count(), c_.initial_balance), busy_(c_.trader_count(), false) {
    c_.validate();
    if (!is_plaintext(c_.protocol)) throw ParameterError("plain runner needs a plaintext protocol");
  }

  const Chain& chain() const override { return chain_; }
  std::optional<std::int64_t> conserved_total() const override {
    std::int64_t total = marketplace_ + std::accumulate(balances_.begin(), balances_.end(), std::int64_t{0});
    for (const auto& [id, o] : orders_)
      if (o.side == Side::buy) total += o.rate;
    return total;
  }

  RoundMetrics run_round(std::uint64_t round, const std::vector<Intent>& intents) override {
    RoundMetrics m;
    m.round = round;
    m.seconds.wait = c_.round_seconds / 2;
    const auto picks = detail::assign_traders(busy_, intents.size(), c_, round);
    for (std::size_t k = 0; k < picks.size(); ++k) {
      const auto t = picks[k];
      const auto& in = intents[k];
      if (in.side == Side::buy && balances_[t] < in.rate) continue;
      const OrderId id = next_id_++;
      orders_[id] = {id, t, in.side, in.rate, round, 0};
      busy_[t] = true;
      if (in.side == Side::buy) balances_[t] -= in.rate;
      ++m.submitted;
      Event e;
      e["type"] = "order_accepted";
      e["order"] = id;
      e["side"] = std::string(to_string(in.side));
      e["account"] = t;
      e["round"] = round;
      if (c_.protocol != Protocol::semi_private) e["rate"] = in.rate;
      chain_.record(std::move(e));
    }
    m.book = orders_.size();

    detail::Stopwatch sw;
    std::vector<const Live*> sorted;
    for (const auto& [id, o] : orders_) sorted.push_back(&o);
    std::sort(sorted.begin(), sorted.end(), [](const Live* a, const Live* b) {
      return detail::sort_key(a->rate, a->side, a->round, a->id) < detail::sort_key(b->rate, b->side, b->round, b->id);
    });
    m.seconds.sort = sw.lap();
    std::vector<double> rates;
    for (auto* o : sorted) rates.push_back(static_cast<double>(o->rate));

    if (c_.matching == MatchingRule::maximal_fair) {
      SortedBook book;
      for (auto* o : sorted) book.push_back({o->id, o->side});
      m.matches = fair_swap(match_orders(book), book);
    } else {
      std::vector<PricedOrder> buys, sells;
      for (auto* o : sorted) (o->side == Side::buy ? buys : sells).push_back({o->id, o->rate, o->id});
      m.matches = price_time_match(std::move(buys), std::move(sells));
    }
    m.seconds.match = sw.lap();

    std::vector<std::int64_t> matched_buys;
    for (const auto& p : m.matches) {
      const auto b = orders_.at(p.buy), s = orders_.at(p.sell);
      balances_[s.trader] += s.rate;
      marketplace_ += b.rate - s.rate;
      m.fees += b.rate - s.rate;
      m.settled_worth += b.rate;
      matched_buys.push_back(b.rate);
      close(p.buy);
      close(p.sell);
    }
    m.matched = 2 * m.matches.size();
    if (!m.matches.empty()) {
      Event e;
      e["type"] = c_.protocol == Protocol::offchain_matching ? "offchain_match_posted" : "settlement_recorded";
      e["pairs"] = m.matches.size();
      e["fee_total"] = m.fees;
      chain_.record(std::move(e));
    }
    m.seconds.settle = sw.lap();
    std::sort(matched_buys.rbegin(), matched_buys.rend());
    matched_buys.resize(std::min<std::size_t>(matched_buys.size(), static_cast<std::size_t>(c_.top_k)));
    m.topk = matched_buys;

    if (rates.size() >= 2) {
      const auto truth = detail::sample_params(rates);
      m.true_mean = truth.mean;
      m.true_sigma = truth.sigma;
    }

    std::vector<OrderId> expired;
    for (auto& [id, o] : orders_)
      if (++o.unmatched > c_.max_unmatched_rounds) expired.push_back(id);
    for (auto id : expired) {
      const auto& o = orders_.at(id);
      if (o.side == Side::buy) balances_[o.trader] += o.rate;
      close(id);
    }
    m.expired = expired.size();
    chain_.seal();
    m.finish();
    return m;
  }

 private:
  struct Live {
    OrderId id;
    std::size_t trader;
    Side side;
    std::int64_t rate;
    std::uint64_t round;
    std::uint64_t unmatched;
  };

  void close(OrderId id) {
    busy_[orders_.at(id).trader] = false;
    orders_.erase(id);
  }

  ExperimentConfig c_;
  Chain chain_;
  std::vector<std::int64_t> balances_;
  std::vector<bool> busy_;
  std::int64_t marketplace_ = 0;
  std::map<OrderId, Live> orders_;
  OrderId next_id_ = 1;
};

namespace detail {

/// Client-side state of one trader: what it alone knows.
template <PrimeOrderGroup G>
struct TraderState {
  AccountSlot slot = 0;
  Opening<G> balance;
  std::optional<OrderId> order;
  TraderKeys keys;
};

template <PrimeOrderGroup G>
struct OrderSecret {
  std::size_t trader = 0;
  Side side = Side::buy;
  std::int64_t rate = 0;
  typename G::Scalar blinding{};
  typename G::Scalar rerand{};
  std::uint64_t round = 0;
};

}  // namespace detail

/// Common trader and ledger bookkeeping of the committed-rate protocols.
template <PrimeOrderGroup G>
class CommittedRunner : public ProtocolRunner {
 public:
  using Scalar = typename G::Scalar;

  explicit CommittedRunner(ExperimentConfig c)
      : c_(std::move(c)), ledger_(typename Ledger<G>::Config{c_.range_bits, c_.test_mode}),
        rng_(Rng(c_.seed).fork("runner")) {
    c_.validate();
    for (std::size_t t = 0; t < c_.trader_count(); ++t) {
      detail::TraderState<G> s;
      s.balance = {c_.initial_balance, Scalar::random(rng_)};
      s.slot = ledger_.open_account(s.balance.commitment(), s.balance);
      traders_.push_back(std::move(s));
      owner_.push_back(t);
    }
  }

  const Chain& chain() const override { return ledger_.chain(); }
  std::optional<std::int64_t> conserved_total() const override {
    if (!c_.test_mode) return std::nullopt;
    return ledger_.tracked_total();
  }
  Ledger<G>& ledger() { return ledger_; }
  const std::vector<detail::TraderState<G>>& traders() const { return traders_; }
  const std::map<OrderId, detail::OrderSecret<G>>& secrets() const { return secrets_; }

 protected:
  struct Submitted {
    OrderId id;
    CommittedShares<G> rate;
    CommittedShares<G> rerand;
  };

  /// Posts the round's intents; returns what each trader shared.
  std::vector<Submitted> submit(std::uint64_t round, const std::vector<Intent>& intents, const SharingParams& sharing,
                                bool with_rerand, RoundMetrics& m) {
    ledger_.begin_round(round);
    std::vector<bool> busy;
    for (const auto& t : traders_) busy.push_back(t.order.has_value());
    const auto picks = detail::assign_traders(busy, intents.size(), c_, round);
    std::vector<Submitted> out;
    for (std::size_t k = 0; k < picks.size(); ++k) {
      auto& t = traders_[picks[k]];
      const auto& in = intents[k];
      const Scalar blinding = Scalar::random(rng_);
      const Opening<G> rate_open{in.rate, blinding};
      typename Ledger<G>::Submission sub;
      sub.side = in.side;
      sub.account = t.slot;
      sub.sharing = sharing;
      sub.tracked_rate = rate_open;
      Submitted s{0, share_with_commitments<G>(Scalar::from_i64(in.rate), blinding, sharing, rng_), {}};
      const Scalar rho = Scalar::random(rng_);
      sub.share_commitments = s.rate.commitments;
      if (with_rerand) {
        s.rerand = share_with_commitments<G>(rho, Scalar::random(rng_), sharing, rng_);
        sub.rerand_commitments = s.rerand.commitments;
      }
      const Opening<G> remaining = t.balance - rate_open;
      if (in.side == Side::buy) {
        if (remaining.value < 0) continue;  // the range proof could not be built
        sub.balance_proof = prove_range<G>(remaining.value, remaining.blinding, c_.range_bits,
                                           Ledger<G>::balance_proof_context(t.slot, round), rng_);
      }
      try {
        s.id = ledger_.submit_order(sub);
      } catch (const LedgerRejection&) {
        continue;
      }
      if (in.side == Side::buy) t.balance = remaining;
      t.order = s.id;
      secrets_[s.id] = {picks[k], in.side, in.rate, blinding, rho, round};
      ++m.submitted;
      out.push_back(std::move(s));
    }
    return out;
  }

  /// Opening updates of a difference-scheme settlement.
  void credit_sellers(const MatchSet& pairs, RoundMetrics& m) {
    for (const auto& p : pairs) {
      const auto& b = secrets_.at(p.buy);
      const auto& s = secrets_.at(p.sell);
      traders_[s.trader].balance += Opening<G>{s.rate, s.blinding};
      m.fees += b.rate - s.rate;
      m.settled_worth += b.rate;
    }
  }

  void close(OrderId id) {
    traders_[secrets_.at(id).trader].order.reset();
    secrets_.erase(id);
  }

  std::vector<std::int64_t> matched_buy_rates(const MatchSet& pairs) const {
    std::vector<std::int64_t> r;
    for (const auto& p : pairs) r.push_back(secrets_.at(p.buy).rate);
    std::sort(r.rbegin(), r.rend());
    return r;
  }

  /// Ages the book; refunds come back to the owners' current accounts.
  void expire(RoundMetrics& m) {
    const auto gone = ledger_.expire_orders(c_.max_unmatched_rounds);
    for (auto id : gone) {
      const auto& s = secrets_.at(id);
      if (s.side == Side::buy) traders_[s.trader].balance += Opening<G>{s.rate, s.blinding};
      close(id);
    }
    m.expired = gone.size();
  }

  std::vector<double> ascending_rates(const std::vector<OrderId>& ids) const {
    std::vector<double> r;
    for (auto id : ids) r.push_back(static_cast<double>(secrets_.at(id).rate));
    std::sort(r.begin(), r.end());
    return r;
  }

  ExperimentConfig c_;
  Ledger<G> ledger_;
  Rng rng_;
  std::vector<detail::TraderState<G>> traders_;
  std::vector<std::size_t> owner_;  // slot -> trader
  std::map<OrderId, detail::OrderSecret<G>> secrets_;
};

/// Rialto and Rialto+: brokers sort, settle, reveal and shuffle in MPC.
template <PrimeOrderGroup G>
class RialtoRunner final : public CommittedRunner<G> {
  using Base = CommittedRunner<G>;
  using Scalar = typename G::Scalar;

 public:
  explicit RialtoRunner(ExperimentConfig c)
      : Base(std::move(c)), engine_(engine_config(this->c_), Rng(this->c_.seed).fork("engine")) {
    if (!is_mpc(this->c_.protocol)) throw ParameterError("rialto runner needs rialto or rialto-plus");
  }

  mpc::Engine<G>& engine() { return engine_; }
  const mpc::LeakageLog* leakage() const override { return &engine_.leakage(); }

  RoundMetrics run_round(std::uint64_t round, const std::vector<Intent>& intents) override {
    auto& c = this->c_;
    auto& ledger = this->ledger_;
    RoundMetrics m;
    m.round = round;
    m.seconds.wait = c.round_seconds / 2;
    engine_.begin_round(round);
    const auto submitted = this->submit(round, intents, engine_.sharing(), true, m);
    for (const auto& s : submitted) {
      const auto& sec = this->secrets_.at(s.id);
      for (std::size_t i = 0; i < engine_.brokers(); ++i) {
        mpc::ShareBundle<G> b;
        b.order = s.id;
        b.party = i + 1;
        b.account = this->traders_[sec.trader].slot;
        b.rate_share = s.rate.values.shares[i].value;
        b.rate_blinding_share = s.rate.blindings.shares[i].value;
        b.rerand_share = s.rerand.values.shares[i].value;
        b.rerand_blinding_share = s.rerand.blindings.shares[i].value;
        b.rate_commitment = s.rate.commitments[i];
        b.rerand_commitment = s.rerand.commitments[i];
        engine_.deliver(i, b);
      }
      rerand_[s.id] = sec.rerand;
      unvalidated_.push_back(s.id);
      shuffle_queue_.push_back(s.id);
    }
    m.book = ledger.open_orders().size();

    try {
      run_mpc(round, m);
    } catch (const ProtocolAbort& e) {
      engine_.abandon_session();
      m.aborted = true;
      if (e.broker() != ProtocolAbort::kNoBroker) m.flagged_brokers.push_back(e.broker());
      Event ev;
      ev["type"] = "round_aborted";
      ev["round"] = round;
      ev["reason"] = e.what();
      ledger.record(std::move(ev));
    }
    ledger.seal_block();
    m.finish();
    return m;
  }

 private:
  static mpc::EngineConfig engine_config(const ExperimentConfig& c) {
    mpc::EngineConfig e;
    e.brokers = c.brokers;
    e.sharing = c.protocol == Protocol::rialto_plus ? SharingParams::honest_majority(c.brokers)
                                                    : SharingParams::additive(c.brokers);
    e.transport = c.transport;
    return e;
  }

  void run_mpc(std::uint64_t round, RoundMetrics& m) {
    auto& ledger = this->ledger_;
    if (this->c_.protocol == Protocol::rialto_plus && !unvalidated_.empty()) {
      std::map<OrderId, std::vector<Commitment<G>>> rate, rerand;
      for (auto id : unvalidated_) {
        rate[id] = ledger.order(id).share_commitments;
        rerand[id] = ledger.order(id).rerand_commitments;
      }
      auto h = engine_.input_share_validation(unvalidated_, rate, mpc::ValidationKind::rate);
      const auto h2 = engine_.input_share_validation(unvalidated_, rerand, mpc::ValidationKind::rerandomization);
      for (std::size_t i = 0; i < h.size(); ++i) {
        h[i] = h[i] && h2[i];
        if (!h[i]) m.flagged_brokers.push_back(i);
      }
      engine_.select_parties(h);
      unvalidated_.clear();
    }

    detail::Stopwatch sw;
    std::vector<mpc::SortItem> items;
    for (auto id : ledger.open_orders()) items.push_back({id, ledger.order(id).side, ledger.order(id).round});
    const auto sorted = engine_.sorting_mpc(items);
    m.seconds.sort = sw.lap();

    SortedBook book;
    for (auto id : sorted) book.push_back({id, ledger.order(id).side});
    m.matches = fair_swap(match_orders(book), book);
    m.matched = 2 * m.matches.size();
    m.seconds.match = sw.lap();

    if (!m.matches.empty()) {
      const auto [fee, blinding] = engine_.settlement_mpc(m.matches);
      ledger.apply_settlement(m.matches, fee, blinding);
      this->credit_sellers(m.matches, m);
    }
    m.topk = engine_.topk_reveal(sorted, m.matches, this->c_.top_k);
    m.seconds.settle = sw.lap();
    detail::rank_privacy(m, this->ascending_rates(sorted), this->c_, round);
    for (const auto& p : m.matches) {
      this->close(p.buy);
      this->close(p.sell);
    }
    this->expire(m);

    sw.lap();
    shuffle();
    m.seconds.shuffle = sw.lap();
  }

  /// Re-randomizes and permutes the accounts of this round's submitters.
  void shuffle() {
    auto& ledger = this->ledger_;
    auto& traders = this->traders_;
    std::vector<std::pair<AccountSlot, OrderId>> by_slot;
    for (auto id : shuffle_queue_) by_slot.emplace_back(ledger.order(id).account, id);
    shuffle_queue_.clear();
    if (by_slot.empty()) return;
    std::sort(by_slot.begin(), by_slot.end());

    std::vector<AccountSlot> slots;
    std::vector<std::pair<OrderId, Commitment<G>>> accounts;
    for (const auto& [slot, id] : by_slot) {
      slots.push_back(slot);
      accounts.emplace_back(id, ledger.account(slot).balance);
    }
    const auto result = engine_.shuffle_mpc(accounts);

    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < result.commitments.size(); ++i) where[result.commitments[i].hex()] = i;
    std::vector<Opening<G>> openings(slots.size());
    std::vector<std::size_t> new_owner(slots.size());
    for (std::size_t i = 0; i < by_slot.size(); ++i) {
      const std::size_t t = this->owner_[by_slot[i].first];
      const auto& rho = rerand_.at(by_slot[i].second);
      auto& trader = traders[t];
      trader.balance.blinding = trader.balance.blinding + rho;
      const auto it = where.find(trader.balance.commitment().hex());
      if (it == where.end()) throw ProtocolAbort("shuffle: trader cannot locate its account");
      openings[it->second] = trader.balance;
      new_owner[it->second] = t;
    }
    ledger.replace_accounts(slots, result.commitments, openings);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto t = new_owner[i];
      traders[t].slot = slots[i];
      this->owner_[slots[i]] = t;
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto& trader = traders[new_owner[i]];
      if (!trader.order) continue;
      const auto proof = prove_opening<G>(Scalar::from_i64(trader.balance.value), trader.balance.blinding,
                                          ledger.account(trader.slot).balance,
                                          Ledger<G>::relink_context(*trader.order, trader.slot), this->rng_);
      ledger.relink_order(*trader.order, trader.slot, proof);
    }
    std::vector<OrderId> done;
    for (const auto& [slot, id] : by_slot) {
      rerand_.erase(id);
      if (!ledger.order(id).open) done.push_back(id);
    }
    engine_.forget(done);
  }

  mpc::Engine<G> engine_;
  std::vector<OrderId> unvalidated_;
  std::vector<OrderId> shuffle_queue_;
  std::map<OrderId, Scalar> rerand_;
};

/// Bucket protocol: commitments, a hash-seeded grid, bucket
/// range proofs, public bucket matching and pairwise settlement.
template <PrimeOrderGroup G>
class BucketRunner final : public CommittedRunner<G> {
  using Base = CommittedRunner<G>;
  using Scalar = typename G::Scalar;

 public:
  explicit BucketRunner(ExperimentConfig c) : Base(std::move(c)) {
    if (this->c_.protocol != Protocol::bucketization) throw ParameterError("bucket runner needs bucketization");
    for (std::size_t t = 0; t < this->traders_.size(); ++t) {
      auto& trader = this->traders_[t];
      trader.keys = TraderKeys::generate(this->rng_);
      Event e;
      e["type"] = "keys_registered";
      e["account"] = trader.slot;
      e["sign_pk"] = to_hex(trader.keys.sign_pk);
      e["box_pk"] = to_hex(trader.keys.box_pk);
      this->ledger_.record(std::move(e));
    }
  }

  void set_penalty(DeviationPenalty p) { penalty_ = p; }
  /// Trader `t` will claim rate + delta to its counterparties.
  void set_liar(std::size_t trader, std::int64_t delta) { liars_[trader] = delta; }
  const BucketGrid& last_grid() const { return grid_; }

  RoundMetrics run_round(std::uint64_t round, const std::vector<Intent>& intents) override {
    auto& c = this->c_;
    auto& ledger = this->ledger_;
    RoundMetrics m;
    m.round = round;
    m.seconds.wait = c.round_seconds / 2;
    this->submit(round, intents, SharingParams::additive(1), false, m);
    ledger.seal_block();
    grid_ = choose_buckets(c.bucket_width, ledger.chain().head_hash());
    {
      Event e;
      e["type"] = "buckets_chosen";
      e["round"] = round;
      e["width"] = grid_.width;
      e["offset"] = grid_.offset;
      ledger.record(std::move(e));
    }

    detail::Stopwatch sw;
    std::vector<BucketedBuy> buys;
    std::vector<BucketedSell> sells;
    std::map<std::int64_t, std::size_t> histogram;
    std::vector<OrderId> book;
    for (auto id : ledger.open_orders()) {
      const auto& sec = this->secrets_.at(id);
      const auto ctx = "bucket/" + std::to_string(id) + "/" + std::to_string(round);
      const auto& rate = ledger.order(id).rate;
      const auto claim = assign_bucket<G>(sec.rate, sec.blinding, rate, grid_, ctx, this->rng_);
      if (!verify_bucket<G>(rate, grid_, claim.index, claim.proof, ctx)) {
        ledger.refund_order(id, "bucket proof rejected");
        if (sec.side == Side::buy) this->traders_[sec.trader].balance += Opening<G>{sec.rate, sec.blinding};
        this->close(id);
        continue;
      }
      ++histogram[claim.index];
      book.push_back(id);
      Event e;
      e["type"] = "bucket_disclosed";
      e["order"] = id;
      e["bucket"] = claim.index;
      ledger.record(std::move(e));
      if (sec.side == Side::buy) buys.push_back({id, grid_.floor_of(claim.index), id});
      else sells.push_back({id, grid_.ceiling_of(claim.index), id});
    }
    m.book = book.size();
    {
      Event e;
      e["type"] = "bucket_histogram";
      e["round"] = round;
      auto counts = nlohmann::ordered_json::array();
      for (auto [index, n] : histogram) counts.push_back({index, n});
      e["counts"] = std::move(counts);
      ledger.record(std::move(e));
    }
    m.seconds.sort = sw.lap();

    const auto proposed = bucket_match(std::move(buys), std::move(sells));
    m.seconds.match = sw.lap();

    for (const auto& p : proposed) settle(p, m);
    m.matched = 2 * m.matches.size();
    auto top = this->matched_buy_rates(m.matches);
    top.resize(std::min<std::size_t>(top.size(), static_cast<std::size_t>(std::max<std::int64_t>(c.top_k, 0))));
    m.topk = top;
    m.seconds.settle = sw.lap();

    privacy(m, book, histogram, round);
    for (const auto& p : m.matches) {
      this->close(p.buy);
      this->close(p.sell);
    }
    this->expire(m);
    ledger.seal_block();
    m.finish();
    return m;
  }

 private:
  PairParty<G> party(OrderId id) const {
    const auto& sec = this->secrets_.at(id);
    PairParty<G> p;
    p.order = id;
    p.rate = sec.rate;
    p.blinding = sec.blinding;
    p.keys = this->traders_[sec.trader].keys;
    if (auto it = liars_.find(sec.trader); it != liars_.end()) p.claimed_rate = sec.rate + it->second;
    return p;
  }

  void settle(const MatchPair& pair, RoundMetrics& m) {
    const auto buyer = party(pair.buy), seller = party(pair.sell);
    const auto outcome = this->c_.settlement == SettlementScheme::difference
                             ? settle_difference(this->ledger_, buyer, seller, penalty_, this->rng_)
                             : settle_mean(this->ledger_, buyer, seller, penalty_, this->rng_);
    auto& tb = this->traders_[this->secrets_.at(pair.buy).trader];
    auto& ts = this->traders_[this->secrets_.at(pair.sell).trader];
    if (!outcome.settled) {
      // The cheater's order is closed by the penalty, the victim's by the refund.
      if (*outcome.cheater == pair.sell) {
        tb.balance += Opening<G>{buyer.rate, buyer.blinding};
        ts.balance -= Opening<G>{penalty_.seller_fine, Scalar{}};
      }
      this->close(pair.buy);
      this->close(pair.sell);
      return;
    }
    if (this->c_.settlement == SettlementScheme::difference) {
      ts.balance += Opening<G>{seller.rate, seller.blinding};
    } else {
      const Scalar half = Scalar::from_u64(2).inverse();
      const Opening<G> settled{outcome.settle_rate, (buyer.blinding + seller.blinding) * half};
      ts.balance += settled;
      tb.balance += Opening<G>{buyer.rate, buyer.blinding} - settled - Opening<G>{outcome.fee, Scalar{}};
    }
    m.fees += outcome.fee;
    m.settled_worth += buyer.rate;
    m.matches.push_back(pair);
  }

  void privacy(RoundMetrics& m, const std::vector<OrderId>& book, const std::map<std::int64_t, std::size_t>& histogram,
               std::uint64_t round) {
    const auto rates = this->ascending_rates(book);
    if (rates.size() < 2) return;
    const auto truth = detail::sample_params(rates);
    m.true_mean = truth.mean;
    m.true_sigma = truth.sigma;
    LeakageView view;
    view.order_count = rates.size();
    for (auto r : m.topk) view.top_rates.push_back(static_cast<double>(r));
    const auto bins = histogram_bins(grid_, histogram);
    Rng rng = Rng(this->c_.seed).fork("bucket-estimate", round);
    m.gain_broker = detail::try_gain(
        [&] { return privacy_gain(bucketization_estimate(bins, view, rng, this->c_.bucket_variance), truth); });
    Rng viewer = Rng(this->c_.seed).fork("viewer", round);
    const auto pos = static_cast<std::size_t>(viewer.below(rates.size()));
    view.own = RankedRate{rates.size() - pos, rates[pos]};
    m.gain_trader = detail::try_gain(
        [&] { return privacy_gain(bucketization_estimate(bins, view, rng, this->c_.bucket_variance), truth); });
  }

  DeviationPenalty penalty_;
  std::map<std::size_t, std::int64_t> liars_;
  BucketGrid grid_;
};

}  // namespace rialto::sim
