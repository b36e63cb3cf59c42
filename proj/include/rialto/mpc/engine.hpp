#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "rialto/matching.hpp"
#include "rialto/mpc/gate.hpp"

namespace rialto::mpc {

struct EngineConfig {
  std::size_t brokers = 3;
  SharingParams sharing = SharingParams::additive(3);
  TransportKind transport = TransportKind::in_process;
};

/// Public sort metadata of one order. Rates stay with the brokers.
struct SortItem {
  OrderId id = 0;
  Side side = Side::buy;
  std::uint64_t round = 0;
};

/// Order among equal rates: sells first, then earlier round, then lower id.
inline bool tie_before(const SortItem& a, const SortItem& b) {
  auto key = [](const SortItem& s) { return std::tuple(s.side == Side::sell ? 0 : 1, s.round, s.id); };
  return key(a) < key(b);
}

template <PrimeOrderGroup G>
struct ShuffleResult {
  std::vector<Commitment<G>> commitments;
  std::vector<std::size_t> flagged_brokers;
};

/// Coordinator of the broker actors. Each protocol step is a sequence of
/// request frames to brokers, masked share frames from brokers to the
/// gate, and a result frame from the gate back here.
template <PrimeOrderGroup G>
class Engine {
 public:
  using Scalar = typename G::Scalar;
  using Element = typename G::Element;

  Engine(EngineConfig config, Rng rng) : config_(config), gate_(config.brokers) {
    if (config_.brokers == 0) throw ParameterError("engine: need at least one broker");
    if (config_.sharing.parties != config_.brokers) throw ParameterError("engine: sharing parties != brokers");
    net_ = make_transport(config_.transport, config_.brokers + 3);
    const std::size_t m = config_.brokers;
    std::vector<std::vector<Digest256>> seeds(m, std::vector<Digest256>(m));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        Digest256 s{};
        auto child = rng.fork("pair-seed", i * m + j);
        child.fill(s);
        seeds[i][j] = seeds[j][i] = s;
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      brokers_.push_back(std::make_unique<Broker<G>>(i, m, config_.sharing, seeds[i], rng.fork("broker", i)));
    reset_parties();
  }

  std::size_t brokers() const { return config_.brokers; }
  const SharingParams& sharing() const { return config_.sharing; }
  Broker<G>& broker(std::size_t i) { return *brokers_.at(i); }
  const LeakageLog& leakage() const { return gate_.log(); }
  const Transport& transport() const { return *net_; }
  ActorId trader_actor() const { return config_.brokers + 2; }
  const std::vector<std::size_t>& active_parties() const { return active_; }

  /// After an abort: logs whatever the interrupted session reconstructed
  /// and drops stale replies.
  void abandon_session() {
    pump();
    if (gate_.in_session()) close_session(nlohmann::ordered_json{{"aborted", true}});
    drain();
  }

  void begin_round(std::uint64_t round) {
    round_ = round;
    reset_parties();
  }

  /// Trader-side delivery of one broker's bundle.
  void deliver(std::size_t broker_index, const ShareBundle<G>& bundle) {
    Writer w;
    bundle.write(w);
    net_->send(trader_actor(), broker_index, w.frame(Tag::share_bundle));
    pump();
  }

  void forget(const std::vector<OrderId>& ids) {
    for (auto& b : brokers_)
      for (auto id : ids) b->forget(id);
  }

  /// H[i] is true iff every transcript of broker i verified. Never throws
  /// on dishonesty; see select_parties.
  std::vector<bool> input_share_validation(const std::vector<OrderId>& ids,
                                           const std::map<OrderId, std::vector<Commitment<G>>>& per_share,
                                           ValidationKind kind) {
    const auto op = next_op_++;
    const std::size_t m = config_.brokers;
    PartySet all;
    for (std::size_t i = 1; i <= m; ++i) all.parties.push_back(i);
    {
      Writer w;
      w.u64(op).u8(static_cast<std::uint8_t>(GateOp::validate));
      all.write(w);
      send_gate(w.frame(Tag::gate_expect));
    }
    Writer req;
    req.u64(op).u8(static_cast<std::uint8_t>(kind)).u32(static_cast<std::uint32_t>(ids.size()));
    for (auto id : ids) {
      const auto& comms = per_share.at(id);
      if (comms.size() != m) throw ParameterError("validation: wrong number of share commitments");
      req.u64(id);
      for (const auto& c : comms) req.template element<G>(c.element);
    }
    const Frame request = req.frame(Tag::validate_request);
    for (std::size_t i = 0; i < m; ++i) net_->send(coordinator(), i, request);
    pump();
    auto inbox = drain();
    if (count_tag(inbox, Tag::validate_verdict) == 0) {
      Writer w;
      w.u64(op);
      send_gate(w.frame(Tag::op_timeout));
      pump();
      auto more = drain();
      inbox.insert(inbox.end(), more.begin(), more.end());
    }
    std::vector<std::size_t> votes(m, 0);
    std::size_t voters = 0;
    for (const auto& env : inbox) {
      if (env.frame.tag != Tag::validate_verdict) continue;
      Reader r(env.frame.payload);
      if (r.u64() != op) continue;
      const auto n = r.u32();
      if (n != m) continue;
      ++voters;
      for (std::size_t i = 0; i < m; ++i) votes[i] += r.boolean() ? 1 : 0;
    }
    std::vector<bool> h(m, false);
    for (std::size_t i = 0; i < m; ++i) h[i] = voters > 0 && 2 * votes[i] > voters;
    return h;
  }

  /// Restricts later steps to validated brokers. Aborts when too few remain.
  void select_parties(const std::vector<bool>& validated) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < validated.size(); ++i)
      if (validated[i]) keep.push_back(i + 1);
    require_enough(keep, first_missing(validated));
    active_ = std::move(keep);
  }

  std::vector<OrderId> sorting_mpc(const std::vector<SortItem>& items) {
    std::vector<OrderId> ids;
    for (const auto& it : items) ids.push_back(it.id);
    if (items.empty()) return {};
    if (items.size() == 1) {
      open_session(LeakageTag::sorted_permutation);
      close_session(nlohmann::ordered_json{{"order", ids}});
      return ids;
    }
    open_session(LeakageTag::sorted_permutation);
    std::vector<std::vector<std::size_t>> runs;
    for (std::size_t i = 0; i < items.size(); ++i) runs.push_back({i});
    while (runs.size() > 1) {
      struct Merge {
        std::vector<std::size_t> left, right, out;
        std::size_t li = 0, ri = 0;
      };
      std::vector<Merge> merges;
      for (std::size_t k = 0; k + 1 < runs.size(); k += 2) merges.push_back({runs[k], runs[k + 1], {}});
      std::optional<std::vector<std::size_t>> carry;
      if (runs.size() % 2 == 1) carry = runs.back();
      for (;;) {
        std::vector<std::pair<OrderId, OrderId>> pairs;
        std::vector<bool> ties;
        std::vector<Merge*> active;
        for (auto& mg : merges) {
          if (mg.li < mg.left.size() && mg.ri < mg.right.size()) {
            const auto& a = items[mg.left[mg.li]];
            const auto& b = items[mg.right[mg.ri]];
            pairs.emplace_back(a.id, b.id);
            ties.push_back(tie_before(a, b));
            active.push_back(&mg);
          }
        }
        if (pairs.empty()) break;
        const auto before = compare(pairs, ties);
        for (std::size_t k = 0; k < active.size(); ++k) {
          auto& mg = *active[k];
          if (before[k]) mg.out.push_back(mg.left[mg.li++]);
          else mg.out.push_back(mg.right[mg.ri++]);
        }
      }
      std::vector<std::vector<std::size_t>> next;
      for (auto& mg : merges) {
        mg.out.insert(mg.out.end(), mg.left.begin() + static_cast<std::ptrdiff_t>(mg.li), mg.left.end());
        mg.out.insert(mg.out.end(), mg.right.begin() + static_cast<std::ptrdiff_t>(mg.ri), mg.right.end());
        next.push_back(std::move(mg.out));
      }
      if (carry) next.push_back(std::move(*carry));
      runs = std::move(next);
    }
    std::vector<OrderId> sorted;
    for (auto idx : runs.front()) sorted.push_back(items[idx].id);
    close_session(nlohmann::ordered_json{{"order", sorted}});
    return sorted;
  }

  /// Aggregate (fee, blinding) over matched pairs. Per-pair differences
  /// are never opened.
  std::pair<Scalar, Scalar> settlement_mpc(const MatchSet& pairs) {
    if (pairs.empty()) return {Scalar{}, Scalar{}};
    std::vector<std::pair<OrderId, std::int64_t>> terms;
    for (const auto& p : pairs) {
      terms.emplace_back(p.buy, 1);
      terms.emplace_back(p.sell, -1);
    }
    open_session(LeakageTag::aggregate_fees);
    const auto out = open_linear({{false, terms}, {true, terms}});
    const auto fee = out[0].to_signed();
    close_session(nlohmann::ordered_json{{"pairs", pairs.size()},
                                         {"fee", fee ? nlohmann::ordered_json(*fee) : nlohmann::ordered_json(nullptr)}});
    return {out[0], out[1]};
  }

  /// Rates of the K highest matched buyers, highest first.
  std::vector<std::int64_t> topk_reveal(const std::vector<OrderId>& sorted, const MatchSet& matches, std::int64_t k) {
    if (k < 0) throw ParameterError("topk_reveal: K must be non-negative");
    if (k == 0 || matches.empty()) return {};
    std::map<OrderId, std::size_t> position;
    for (std::size_t i = 0; i < sorted.size(); ++i) position[sorted[i]] = i;
    std::vector<OrderId> buyers;
    for (const auto& m : matches) buyers.push_back(m.buy);
    std::sort(buyers.begin(), buyers.end(), [&](OrderId a, OrderId b) { return position.at(a) > position.at(b); });
    buyers.resize(std::min<std::size_t>(buyers.size(), static_cast<std::size_t>(k)));
    std::vector<std::pair<bool, std::vector<std::pair<OrderId, std::int64_t>>>> items;
    for (auto id : buyers) items.push_back({false, {{id, 1}}});
    open_session(LeakageTag::topk_rates);
    const auto opened = open_linear(items);
    std::vector<std::int64_t> rates;
    for (const auto& v : opened) {
      auto s = v.to_signed();
      if (!s) throw ProtocolAbort("topk_reveal: rate outside the signed range");
      rates.push_back(*s);
    }
    close_session(nlohmann::ordered_json{{"rates", rates}, {"orders", sorted.size()}});
    return rates;
  }

  /// Re-randomizes each account commitment with its owner's shared blinding
  /// and permutes the list through every broker's network in turn.
  ShuffleResult<G> shuffle_mpc(const std::vector<std::pair<OrderId, Commitment<G>>>& accounts) {
    if (accounts.empty()) return {};
    open_session(LeakageTag::shuffled_commitments);
    ShuffleResult<G> result;
    for (;;) {
      const auto op = next_op_++;
      PartySet set{active_};
      Writer ex;
      ex.u64(op).u8(static_cast<std::uint8_t>(GateOp::shuffle));
      set.write(ex);
      ex.u32(static_cast<std::uint32_t>(accounts.size()));
      for (const auto& [id, c] : accounts) ex.template element<G>(c.element);
      send_gate(ex.frame(Tag::gate_expect));
      Writer req;
      req.u64(op);
      set.write(req);
      req.u32(static_cast<std::uint32_t>(accounts.size()));
      for (const auto& [id, c] : accounts) req.u64(id);
      send_parties(req.frame(Tag::shuffle_request));
      auto res = await(op);
      if (!res) continue;
      Reader r(*res);
      r.u64();
      const auto n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) result.commitments.push_back({r.template element<G>()});
      const auto f = r.u32();
      for (std::uint32_t i = 0; i < f; ++i) result.flagged_brokers.push_back(r.u64());
      break;
    }
    close_session(nlohmann::ordered_json::object());
    return result;
  }

 private:
  ActorId gate_id() const { return config_.brokers; }
  ActorId coordinator() const { return config_.brokers + 1; }

  void reset_parties() {
    active_.clear();
    for (std::size_t i = 1; i <= config_.brokers; ++i) active_.push_back(i);
  }

  static std::size_t first_missing(const std::vector<bool>& h) {
    for (std::size_t i = 0; i < h.size(); ++i)
      if (!h[i]) return i;
    return ProtocolAbort::kNoBroker;
  }

  void require_enough(const std::vector<std::size_t>& parties, std::size_t culprit) const {
    const auto& s = config_.sharing;
    const std::size_t needed = s.scheme == SharingScheme::additive ? s.parties : s.threshold;
    if (parties.size() < needed)
      throw ProtocolAbort("only " + std::to_string(parties.size()) + " usable brokers, " + std::to_string(needed) +
                              " required" +
                              (culprit == ProtocolAbort::kNoBroker ? "" : "; broker " + std::to_string(culprit) +
                                                                              " failed"),
                          culprit);
  }

  void send_gate(const Frame& f) {
    net_->send(coordinator(), gate_id(), f);
    step_gate();
  }

  void send_parties(const Frame& f) {
    for (auto p : active_) net_->send(coordinator(), p - 1, f);
  }

  void step_gate() {
    while (auto env = net_->receive(gate_id())) gate_.handle(env->from, env->frame, *net_);
  }

  void pump() {
    bool progress = true;
    while (progress) {
      progress = false;
      for (std::size_t i = 0; i < brokers_.size(); ++i) {
        while (auto env = net_->receive(i)) {
          brokers_[i]->handle(env->from, env->frame, *net_);
          progress = true;
        }
      }
      while (auto env = net_->receive(gate_id())) {
        gate_.handle(env->from, env->frame, *net_);
        progress = true;
      }
    }
  }

  std::vector<Envelope> drain() {
    std::vector<Envelope> out;
    while (auto env = net_->receive(coordinator())) out.push_back(std::move(*env));
    return out;
  }

  static std::size_t count_tag(const std::vector<Envelope>& v, Tag t) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& e) { return e.frame.tag == t; }));
  }

  // Waits for the gate's answer to `op`. On missing brokers either narrows
  // the party set (threshold sharing, enough left) and returns nullopt so
  // the caller retries, or aborts naming the broker.
  std::optional<Bytes> await(std::uint64_t op) {
    pump();
    auto inbox = drain();
    std::set<std::size_t> missing;
    for (auto& env : inbox) {
      Reader r(env.frame.payload);
      if (r.u64() != op) continue;
      if (env.frame.tag == Tag::op_result) return std::move(env.frame.payload);
      if (env.frame.tag == Tag::missing_share) missing.insert(r.u64());
    }
    Writer w;
    w.u64(op);
    send_gate(w.frame(Tag::op_timeout));
    for (auto& env : drain()) {
      Reader r(env.frame.payload);
      if (r.u64() != op) continue;
      if (env.frame.tag == Tag::op_result) return std::move(env.frame.payload);
      if (env.frame.tag == Tag::op_incomplete) {
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) missing.insert(r.u64());
      }
    }
    if (missing.empty()) throw ProtocolAbort("engine: gate produced no result");
    const std::size_t culprit = *missing.begin();
    if (config_.sharing.scheme == SharingScheme::additive)
      throw ProtocolAbort("broker " + std::to_string(culprit) + " failed to supply its shares", culprit);
    std::vector<std::size_t> keep;
    for (auto p : active_)
      if (!missing.count(p - 1)) keep.push_back(p);
    require_enough(keep, culprit);
    active_ = std::move(keep);
    return std::nullopt;
  }

  std::vector<bool> compare(const std::vector<std::pair<OrderId, OrderId>>& pairs, const std::vector<bool>& ties) {
    for (;;) {
      const auto op = next_op_++;
      PartySet set{active_};
      Writer ex;
      ex.u64(op).u8(static_cast<std::uint8_t>(GateOp::compare));
      set.write(ex);
      ex.u32(static_cast<std::uint32_t>(ties.size()));
      for (bool t : ties) ex.boolean(t);
      send_gate(ex.frame(Tag::gate_expect));
      Writer req;
      req.u64(op);
      set.write(req);
      req.u32(static_cast<std::uint32_t>(pairs.size()));
      for (const auto& [a, b] : pairs) req.u64(a).u64(b);
      send_parties(req.frame(Tag::compare_request));
      auto res = await(op);
      if (!res) continue;
      Reader r(*res);
      r.u64();
      const auto n = r.u32();
      std::vector<bool> out;
      for (std::uint32_t i = 0; i < n; ++i) out.push_back(r.boolean());
      return out;
    }
  }

  using LinearItem = std::pair<bool, std::vector<std::pair<OrderId, std::int64_t>>>;

  std::vector<Scalar> open_linear(const std::vector<LinearItem>& items) {
    for (;;) {
      const auto op = next_op_++;
      PartySet set{active_};
      Writer ex;
      ex.u64(op).u8(static_cast<std::uint8_t>(GateOp::open));
      set.write(ex);
      send_gate(ex.frame(Tag::gate_expect));
      Writer req;
      req.u64(op);
      set.write(req);
      req.u32(static_cast<std::uint32_t>(items.size()));
      for (const auto& [blinding, terms] : items) {
        req.u8(blinding ? 1 : 0).u32(static_cast<std::uint32_t>(terms.size()));
        for (const auto& [id, coef] : terms) req.u64(id).i64(coef);
      }
      send_parties(req.frame(Tag::open_request));
      auto res = await(op);
      if (!res) continue;
      Reader r(*res);
      r.u64();
      const auto n = r.u32();
      std::vector<Scalar> out;
      for (std::uint32_t i = 0; i < n; ++i) out.push_back(r.template scalar<G>());
      return out;
    }
  }

  void open_session(LeakageTag tag) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(tag)).u64(round_);
    send_gate(w.frame(Tag::session_open));
  }

  void close_session(const nlohmann::ordered_json& extra) {
    Writer w;
    w.str(extra.dump());
    send_gate(w.frame(Tag::session_close));
  }

  EngineConfig config_;
  std::unique_ptr<Transport> net_;
  std::vector<std::unique_ptr<Broker<G>>> brokers_;
  ReconstructionGate<G> gate_;
  std::vector<std::size_t> active_;
  std::uint64_t round_ = 0;
  std::uint64_t next_op_ = 1;
};

}  // namespace rialto::mpc
