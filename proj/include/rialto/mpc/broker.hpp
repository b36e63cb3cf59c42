#pragma once

#include <sodium.h>

#include <map>
#include <optional>
#include <vector>

#include "rialto/mpc/share_bundle.hpp"
#include "rialto/mpc/transport.hpp"
#include "rialto/secret_sharing.hpp"
#include "rialto/transcript.hpp"
#include "rialto/waksman.hpp"

namespace rialto::mpc {

/// Deviations a broker can be told to make. Used by tamper-injection tests
/// and by the Rialto+ abort experiments.
struct BrokerFault {
  enum class Kind {
    none,
    tamper_rate,              // substitutes rate_share + delta
    tamper_rate_blinding,     // substitutes rate_blinding_share + delta
    tamper_rerand,            // substitutes rerand_share + delta
    tamper_rerand_blinding,   // substitutes rerand_blinding_share + delta
    silent,                   // never answers
    withhold_share,           // forgets the bundle of `order`
    malformed_network,        // drops the last switch of its network
    fixed_network,            // uses `fixed` instead of a uniform permutation
  };
  Kind kind = Kind::none;
  std::optional<OrderId> order;  // empty: every order
  std::int64_t delta = 1;
  Permutation fixed;
};

/// Public parameters every broker needs for one operation.
struct PartySet {
  std::vector<std::size_t> parties;  // 1-based share indices taking part

  void write(Writer& w) const {
    w.u32(static_cast<std::uint32_t>(parties.size()));
    for (auto p : parties) w.u64(p);
  }
  static PartySet read(Reader& r) {
    PartySet s;
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) s.parties.push_back(r.u64());
    return s;
  }
  bool contains(std::size_t party) const {
    return std::find(parties.begin(), parties.end(), party) != parties.end();
  }
};

namespace detail {
/// Challenge of the distributed opening proof, computed over the nonces.
template <PrimeOrderGroup G>
typename G::Scalar validation_challenge(const typename G::Scalar& y, const typename G::Scalar& s) {
  Transcript t = Transcript::for_group<G>("share-validation");
  t.append_scalar<G>("y", y);
  t.append_scalar<G>("s", s);
  return t.challenge_nonzero<G>("e");
}
}  // namespace detail

template <PrimeOrderGroup G>
class Broker {
 public:
  using Scalar = typename G::Scalar;
  using Element = typename G::Element;

  Broker(std::size_t index, std::size_t brokers, SharingParams sharing, std::vector<Digest256> pair_seeds,
         Rng rng)
      : index_(index), brokers_(brokers), sharing_(sharing), pair_seeds_(std::move(pair_seeds)), rng_(std::move(rng)) {}

  std::size_t index() const { return index_; }
  std::size_t party() const { return index_ + 1; }
  ActorId gate() const { return brokers_; }
  ActorId coordinator() const { return brokers_ + 1; }

  void set_fault(BrokerFault fault) { fault_ = std::move(fault); }
  const BrokerFault& fault() const { return fault_; }

  const std::map<OrderId, ShareBundle<G>>& bundles() const { return bundles_; }
  void forget(OrderId id) { bundles_.erase(id); }

  /// Validated-party bits from this broker's last offline verification.
  const std::vector<bool>& validated() const { return validated_; }
  const std::optional<PermutationNetwork>& last_network() const { return last_network_; }

  void handle(ActorId from, const Frame& frame, Transport& net) {
    if (fault_.kind == BrokerFault::Kind::silent && frame.tag != Tag::share_bundle) return;
    Reader r(frame.payload);
    switch (frame.tag) {
      case Tag::share_bundle: on_bundle(r); break;
      case Tag::validate_request: on_validate_request(r, net); break;
      case Tag::validate_output: on_validate_output(r, net); break;
      case Tag::compare_request: on_compare(r, net); break;
      case Tag::open_request: on_open(r, net); break;
      case Tag::shuffle_request: on_shuffle(r, net); break;
      default: throw ProtocolAbort("broker " + std::to_string(index_) + ": unexpected frame from actor " +
                                   std::to_string(from), index_);
    }
  }

 private:
  bool targeted(OrderId id) const { return !fault_.order || *fault_.order == id; }

  void on_bundle(Reader& r) {
    auto b = ShareBundle<G>::read(r);
    if (targeted(b.order)) {
      const auto d = Scalar::from_i64(fault_.delta);
      switch (fault_.kind) {
        case BrokerFault::Kind::tamper_rate: b.rate_share += d; break;
        case BrokerFault::Kind::tamper_rate_blinding: b.rate_blinding_share += d; break;
        case BrokerFault::Kind::tamper_rerand: b.rerand_share += d; break;
        case BrokerFault::Kind::tamper_rerand_blinding: b.rerand_blinding_share += d; break;
        case BrokerFault::Kind::withhold_share: return;
        default: break;
      }
    }
    bundles_[b.order] = b;
  }

  const ShareBundle<G>* bundle_or_report(std::uint64_t op, OrderId id, Transport& net) {
    auto it = bundles_.find(id);
    if (it != bundles_.end()) return &it->second;
    Writer w;
    w.u64(op).u64(index_).u64(id);
    net.send(index_, coordinator(), w.frame(Tag::missing_share));
    return nullptr;
  }

  Scalar mask(std::uint64_t op, std::uint64_t idx, const PartySet& set) const {
    Scalar m{};
    for (std::size_t peer_party : set.parties) {
      const std::size_t peer = peer_party - 1;
      if (peer == index_) continue;
      std::array<std::uint8_t, 16> msg{};
      for (int k = 0; k < 8; ++k) {
        msg[k] = static_cast<std::uint8_t>(op >> (8 * (7 - k)));
        msg[8 + k] = static_cast<std::uint8_t>(idx >> (8 * (7 - k)));
      }
      std::array<std::uint8_t, 64> wide{};
      crypto_generichash(wide.data(), wide.size(), msg.data(), msg.size(), pair_seeds_[peer].data(),
                         pair_seeds_[peer].size());
      const Scalar v = Scalar::from_wide(wide);
      if (index_ < peer) m += v;
      else m -= v;
    }
    return m;
  }

  // Preparation phase: fresh nonces per order, inputs handed to the gate.
  void on_validate_request(Reader& r, Transport& net) {
    const auto op = r.u64();
    const auto kind = static_cast<ValidationKind>(r.u8());
    const auto count = r.u32();
    pending_validation_ = {};
    pending_validation_.op = op;
    Writer w;
    w.u64(op).u64(index_).u8(static_cast<std::uint8_t>(kind));
    Writer body;
    std::uint32_t sent = 0;
    bool missing = false;
    for (std::uint32_t t = 0; t < count; ++t) {
      const OrderId id = r.u64();
      std::vector<Commitment<G>> per_broker;
      for (std::size_t j = 0; j < brokers_; ++j) per_broker.push_back({r.template element<G>()});
      pending_validation_.commitments.emplace_back(id, std::move(per_broker));
      const auto* b = bundle_or_report(op, id, net);
      if (!b) {
        missing = true;
        continue;
      }
      const Scalar y = Scalar::random(rng_);
      const Scalar s = Scalar::random(rng_);
      const Element d = G::g().pow(y) * G::h().pow(s);
      const bool rate = kind == ValidationKind::rate;
      body.u64(id);
      body.template scalar<G>(y).template scalar<G>(s);
      body.template scalar<G>(rate ? b->rate_share : b->rerand_share);
      body.template scalar<G>(rate ? b->rate_blinding_share : b->rerand_blinding_share);
      body.template element<G>(d);
      ++sent;
    }
    if (missing) return;
    w.u32(sent);
    auto head = w.take();
    auto tail = body.take();
    head.insert(head.end(), tail.begin(), tail.end());
    net.send(index_, gate(), Frame{Tag::validate_input, std::move(head)});
  }

  // Offline verification phase over every broker's published transcript.
  void on_validate_output(Reader& r, Transport& net) {
    const auto op = r.u64();
    (void)r.u8();
    const auto nb = r.u32();
    std::vector<bool> h(brokers_, false);
    std::vector<std::map<OrderId, std::array<Scalar, 3>>> scalars(brokers_);
    std::vector<std::map<OrderId, Element>> announcements(brokers_);
    std::vector<bool> present(brokers_, false);
    for (std::uint32_t k = 0; k < nb; ++k) {
      const auto j = r.u64();
      const auto count = r.u32();
      if (j >= brokers_) throw ProtocolAbort("validation output names unknown broker", index_);
      present[j] = true;
      for (std::uint32_t t = 0; t < count; ++t) {
        const OrderId id = r.u64();
        const Element d = r.template element<G>();
        const Scalar e = r.template scalar<G>();
        const Scalar a = r.template scalar<G>();
        const Scalar b = r.template scalar<G>();
        announcements[j][id] = d;
        scalars[j][id] = {e, a, b};
      }
    }
    for (std::size_t j = 0; j < brokers_; ++j) {
      bool ok = present[j];
      for (const auto& [id, comms] : pending_validation_.commitments) {
        if (!ok) break;
        auto it = scalars[j].find(id);
        if (it == scalars[j].end()) {
          ok = false;
          break;
        }
        const auto& [e, a, b] = it->second;
        const Element& d = announcements[j].at(id);
        ok = !e.is_zero() && G::g().pow(a) * G::h().pow(b) == d * comms[j].element.pow(e);
      }
      h[j] = ok;
    }
    validated_ = h;
    Writer w;
    w.u64(op).u32(static_cast<std::uint32_t>(brokers_));
    for (bool bit : h) w.boolean(bit);
    net.send(index_, coordinator(), w.frame(Tag::validate_verdict));
  }

  void on_compare(Reader& r, Transport& net) {
    const auto op = r.u64();
    const auto set = PartySet::read(r);
    if (!set.contains(party())) return;
    const Scalar weight = reconstruction_weight<G>(sharing_, set.parties, party());
    const auto count = r.u32();
    Writer w;
    w.u64(op).u64(index_).u32(count);
    for (std::uint32_t k = 0; k < count; ++k) {
      const OrderId a = r.u64();
      const OrderId b = r.u64();
      const auto* ba = bundle_or_report(op, a, net);
      const auto* bb = bundle_or_report(op, b, net);
      if (!ba || !bb) return;
      w.template scalar<G>(weight * (ba->rate_share - bb->rate_share) + mask(op, k, set));
    }
    net.send(index_, gate(), w.frame(Tag::compare_share));
  }

  void on_open(Reader& r, Transport& net) {
    const auto op = r.u64();
    const auto set = PartySet::read(r);
    if (!set.contains(party())) return;
    const Scalar weight = reconstruction_weight<G>(sharing_, set.parties, party());
    const auto items = r.u32();
    Writer w;
    w.u64(op).u64(index_).u32(items);
    for (std::uint32_t k = 0; k < items; ++k) {
      const bool blinding = r.u8() == 1;
      const auto terms = r.u32();
      Scalar acc{};
      for (std::uint32_t t = 0; t < terms; ++t) {
        const OrderId id = r.u64();
        const auto coef = Scalar::from_i64(r.i64());
        const auto* b = bundle_or_report(op, id, net);
        if (!b) return;
        acc += coef * (blinding ? b->rate_blinding_share : b->rate_share);
      }
      w.template scalar<G>(weight * acc + mask(op, k, set));
    }
    net.send(index_, gate(), w.frame(Tag::open_share));
  }

  void on_shuffle(Reader& r, Transport& net) {
    const auto op = r.u64();
    const auto set = PartySet::read(r);
    if (!set.contains(party())) return;
    const Scalar weight = reconstruction_weight<G>(sharing_, set.parties, party());
    const auto count = r.u32();
    Writer w;
    w.u64(op).u64(index_).u32(count);
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto* b = bundle_or_report(op, r.u64(), net);
      if (!b) return;
      // This broker's piece of the commitment to zero h^rho.
      w.template element<G>(G::h().pow(weight * b->rerand_share + mask(op, k, set)));
    }
    PermutationNetwork network = fault_.kind == BrokerFault::Kind::fixed_network && fault_.fixed.size() == count
                                     ? build_network(fault_.fixed)
                                     : sample_uniform_network(count, rng_);
    if (fault_.kind == BrokerFault::Kind::malformed_network && !network.gates.empty()) network.gates.pop_back();
    last_network_ = network;
    w.u64(network.size).u32(static_cast<std::uint32_t>(network.gates.size()));
    for (const auto& g : network.gates) w.u64(g.a).u64(g.b).u64(g.layer).boolean(g.cross);
    net.send(index_, gate(), w.frame(Tag::shuffle_share));
  }

  struct PendingValidation {
    std::uint64_t op = 0;
    std::vector<std::pair<OrderId, std::vector<Commitment<G>>>> commitments;
  };

  std::size_t index_;
  std::size_t brokers_;
  SharingParams sharing_;
  std::vector<Digest256> pair_seeds_;
  Rng rng_;
  BrokerFault fault_;
  std::map<OrderId, ShareBundle<G>> bundles_;
  PendingValidation pending_validation_;
  std::vector<bool> validated_;
  std::optional<PermutationNetwork> last_network_;
};

}  // namespace rialto::mpc
