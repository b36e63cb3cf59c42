#pragma once

#include <map>
#include <optional>
#include <set>

#include "rialto/mpc/broker.hpp"
#include "rialto/mpc/leakage.hpp"

namespace rialto::mpc {

enum class GateOp : std::uint8_t { validate = 1, compare, open, shuffle };

/// The sealed reconstruction point of the substrate.
///
/// Brokers send it masked, share-weighted inputs; it reconstructs only what
/// an operation is defined to output and answers the coordinator. Every
/// reconstruction happens inside a session, and closing a session writes
/// exactly one LeakageLog entry. Validation transcripts are the one
/// exception: they are per-share proofs, not reconstructions.
template <PrimeOrderGroup G>
class ReconstructionGate {
 public:
  using Scalar = typename G::Scalar;
  using Element = typename G::Element;

  explicit ReconstructionGate(std::size_t brokers) : brokers_(brokers) {}

  ActorId id() const { return brokers_; }
  ActorId coordinator() const { return brokers_ + 1; }
  const LeakageLog& log() const { return log_; }
  bool in_session() const { return session_.has_value(); }

  void handle(ActorId from, const Frame& frame, Transport& net) {
    Reader r(frame.payload);
    switch (frame.tag) {
      case Tag::session_open: {
        if (session_) throw ProtocolAbort("gate: session already open");
        const auto tag = static_cast<LeakageTag>(r.u8());
        session_ = Session{tag, r.u64(), nlohmann::ordered_json::object(), 0};
        break;
      }
      case Tag::session_close: close_session(r); break;
      case Tag::gate_expect: on_expect(r); break;
      case Tag::validate_input: on_input(from, frame, net); break;
      case Tag::compare_share:
      case Tag::open_share:
      case Tag::shuffle_share: on_input(from, frame, net); break;
      case Tag::op_timeout: on_timeout(r, net); break;
      default: throw ProtocolAbort("gate: unexpected frame from actor " + std::to_string(from));
    }
  }

 private:
  struct Session {
    LeakageTag tag;
    std::uint64_t round;
    nlohmann::ordered_json payload;
    std::size_t reconstructions;
  };

  struct Pending {
    GateOp kind{};
    PartySet parties;
    std::vector<bool> tie_first;          // compare
    std::vector<Element> bases;           // shuffle
    std::map<std::size_t, Bytes> inputs;  // broker -> raw payload
  };

  void require_session(std::initializer_list<LeakageTag> allowed) {
    if (!session_) throw ProtocolAbort("gate: reconstruction requested outside a session");
    for (auto t : allowed)
      if (session_->tag == t) return;
    throw ProtocolAbort("gate: operation not permitted in a " + std::string(to_string(session_->tag)) + " session");
  }

  void on_expect(Reader& r) {
    const auto op = r.u64();
    Pending p;
    p.kind = static_cast<GateOp>(r.u8());
    p.parties = PartySet::read(r);
    switch (p.kind) {
      case GateOp::compare: {
        require_session({LeakageTag::sorted_permutation});
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) p.tie_first.push_back(r.boolean());
        break;
      }
      case GateOp::open: require_session({LeakageTag::aggregate_fees, LeakageTag::topk_rates}); break;
      case GateOp::shuffle: {
        require_session({LeakageTag::shuffled_commitments});
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) p.bases.push_back(r.template element<G>());
        break;
      }
      case GateOp::validate: break;
    }
    pending_[op] = std::move(p);
  }

  void on_input(ActorId from, const Frame& frame, Transport& net) {
    Reader r(frame.payload);
    const auto op = r.u64();
    const auto broker = r.u64();
    if (broker != from) throw ProtocolAbort("gate: broker identity mismatch", from);
    auto it = pending_.find(op);
    if (it == pending_.end()) return;  // late input for a finished operation
    it->second.inputs[broker] = frame.payload;
    const std::size_t expected = it->second.kind == GateOp::validate ? brokers_ : it->second.parties.parties.size();
    if (it->second.inputs.size() == expected) finish(op, net);
  }

  void on_timeout(Reader& r, Transport& net) {
    const auto op = r.u64();
    auto it = pending_.find(op);
    if (it == pending_.end()) return;
    if (it->second.kind == GateOp::validate) {
      finish(op, net);  // missing brokers simply have no transcript
      return;
    }
    Writer w;
    w.u64(op);
    std::vector<std::size_t> missing;
    for (auto party : it->second.parties.parties)
      if (!it->second.inputs.count(party - 1)) missing.push_back(party - 1);
    w.u32(static_cast<std::uint32_t>(missing.size()));
    for (auto m : missing) w.u64(m);
    pending_.erase(it);
    net.send(id(), coordinator(), w.frame(Tag::op_incomplete));
  }

  void finish(std::uint64_t op, Transport& net) {
    Pending p = std::move(pending_.at(op));
    pending_.erase(op);
    switch (p.kind) {
      case GateOp::validate: return finish_validation(op, p, net);
      case GateOp::compare: return finish_compare(op, p, net);
      case GateOp::open: return finish_open(op, p, net);
      case GateOp::shuffle: return finish_shuffle(op, p, net);
    }
  }

  // Sums the per-broker scalar vectors; masks cancel over the party set.
  std::vector<Scalar> sum_scalars(const Pending& p) const {
    std::vector<Scalar> total;
    for (const auto& [broker, raw] : p.inputs) {
      Reader r(raw);
      r.u64();
      r.u64();
      const auto n = r.u32();
      if (total.empty()) total.resize(n);
      if (total.size() != n) throw ProtocolAbort("gate: share vector length mismatch", broker);
      for (std::uint32_t i = 0; i < n; ++i) total[i] += r.template scalar<G>();
    }
    return total;
  }

  void finish_validation(std::uint64_t op, Pending& p, Transport& net) {
    Writer w;
    w.u64(op).u8(static_cast<std::uint8_t>(ValidationKind::rate));
    w.u32(static_cast<std::uint32_t>(p.inputs.size()));
    for (const auto& [broker, raw] : p.inputs) {
      Reader r(raw);
      r.u64();
      r.u64();
      r.u8();
      const auto count = r.u32();
      w.u64(broker).u32(count);
      for (std::uint32_t t = 0; t < count; ++t) {
        const OrderId id = r.u64();
        const Scalar y = r.template scalar<G>();
        const Scalar s = r.template scalar<G>();
        const Scalar v = r.template scalar<G>();
        const Scalar rb = r.template scalar<G>();
        const Element d = r.template element<G>();
        const Scalar e = detail::validation_challenge<G>(y, s);
        w.u64(id).template element<G>(d).template scalar<G>(e);
        w.template scalar<G>(y + e * v).template scalar<G>(s + e * rb);
      }
    }
    const Frame out = w.frame(Tag::validate_output);
    for (ActorId b = 0; b < brokers_; ++b) net.send(id(), b, out);
  }

  void finish_compare(std::uint64_t op, Pending& p, Transport& net) {
    const auto diffs = sum_scalars(p);
    if (diffs.size() != p.tie_first.size()) throw ProtocolAbort("gate: comparison batch size mismatch");
    Writer w;
    w.u64(op).u32(static_cast<std::uint32_t>(diffs.size()));
    for (std::size_t i = 0; i < diffs.size(); ++i) {
      const auto d = diffs[i].to_signed();
      if (!d) throw ProtocolAbort("gate: rate difference outside the signed range");
      w.boolean(*d < 0 || (*d == 0 && p.tie_first[i]));
    }
    session_->reconstructions += diffs.size();
    net.send(id(), coordinator(), w.frame(Tag::op_result));
  }

  void finish_open(std::uint64_t op, Pending& p, Transport& net) {
    const auto values = sum_scalars(p);
    Writer w;
    w.u64(op).u32(static_cast<std::uint32_t>(values.size()));
    for (const auto& v : values) w.template scalar<G>(v);
    session_->reconstructions += values.size();
    auto& opened = session_->payload["opened"];
    for (const auto& v : values) {
      if (auto s = v.to_signed()) opened.push_back(*s);
      else opened.push_back(to_hex(v.to_bytes()));
    }
    net.send(id(), coordinator(), w.frame(Tag::op_result));
  }

  void finish_shuffle(std::uint64_t op, Pending& p, Transport& net) {
    const std::size_t n = p.bases.size();
    std::vector<Element> items = p.bases;
    std::vector<std::size_t> flagged;
    // Re-randomize: C * prod_i h^(lambda_i rho_i + mask_i) = C * h^rho.
    for (const auto& [broker, raw] : p.inputs) {
      Reader r(raw);
      r.u64();
      r.u64();
      const auto count = r.u32();
      if (count != n) throw ProtocolAbort("gate: shuffle input length mismatch", broker);
      for (std::uint32_t i = 0; i < count; ++i) items[i] = items[i] * r.template element<G>();
    }
    // Compose the networks in broker order.
    for (const auto& [broker, raw] : p.inputs) {
      Reader r(raw);
      r.u64();
      r.u64();
      const auto count = r.u32();
      for (std::uint32_t i = 0; i < count; ++i) r.template element<G>();
      PermutationNetwork net_b;
      net_b.size = r.u64();
      const auto gates = r.u32();
      for (std::uint32_t g = 0; g < gates; ++g) {
        SwapGate sg;
        sg.a = r.u64();
        sg.b = r.u64();
        sg.layer = r.u64();
        sg.cross = r.boolean();
        net_b.gates.push_back(sg);
      }
      if (net_b.size != n || !has_canonical_topology(net_b)) {
        flagged.push_back(broker);
        continue;  // treated as the identity
      }
      items = apply_network(net_b, std::move(items));
    }
    Writer w;
    w.u64(op).u32(static_cast<std::uint32_t>(n));
    for (const auto& e : items) w.template element<G>(e);
    w.u32(static_cast<std::uint32_t>(flagged.size()));
    for (auto f : flagged) w.u64(f);
    session_->reconstructions += n;
    auto& list = session_->payload["commitments"];
    list = nlohmann::ordered_json::array();
    for (const auto& e : items) list.push_back(to_hex(e.to_bytes()));
    if (!flagged.empty()) session_->payload["flagged_brokers"] = flagged;
    net.send(id(), coordinator(), w.frame(Tag::op_result));
  }

  void close_session(Reader& r) {
    if (!session_) throw ProtocolAbort("gate: no session to close");
    auto extra = nlohmann::ordered_json::parse(r.str());
    auto payload = std::move(session_->payload);
    for (auto& [k, v] : extra.items()) payload[k] = v;
    payload["reconstructions"] = session_->reconstructions;
    log_.append({session_->round, session_->tag, std::move(payload)});
    session_.reset();
  }

  std::size_t brokers_;
  std::optional<Session> session_;
  std::map<std::uint64_t, Pending> pending_;
  LeakageLog log_;
};

}  // namespace rialto::mpc
