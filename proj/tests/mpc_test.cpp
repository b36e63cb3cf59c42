#include <gtest/gtest.h>

#include <set>

#include "desk.hpp"
#include "rialto/group/ristretto255.hpp"
#include "rialto/group/schnorr_group.hpp"

using namespace rialto;
using namespace rialto::group;
using desk::Desk;
using desk::Intent;
using mpc::BrokerFault;
using mpc::LeakageTag;
using mpc::ValidationKind;

namespace {

template <class G>
void fill_random(Desk<G>& d, std::size_t n, Rng& rng, std::int64_t lo = 200, std::int64_t hi = 300) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto side = rng.below(2) ? Side::buy : Side::sell;
    d.add({side, lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))), rng.below(3)});
  }
}

std::multiset<LeakageTag> tags(const mpc::LeakageLog& log) {
  std::multiset<LeakageTag> out;
  for (const auto& e : log.entries()) out.insert(e.tag);
  return out;
}

}  // namespace

TEST(SortingMpc, SmallExamples) {
  Desk<Ristretto255> d;
  const auto a = d.add({Side::buy, 10, 0});
  const auto b = d.add({Side::sell, 5, 0});
  EXPECT_EQ(d.engine().sorting_mpc(d.items()), (std::vector<OrderId>{b, a}));

  Desk<Ristretto255> ties;
  ties.add({Side::buy, 7, 0}, 1);
  ties.add({Side::buy, 7, 0}, 2);
  EXPECT_EQ(ties.engine().sorting_mpc(ties.items()), (std::vector<OrderId>{1, 2}));

  // Sell before buy at equal rate, then earlier round.
  Desk<Ristretto255> mixed;
  mixed.add({Side::buy, 7, 0}, 1);
  mixed.add({Side::sell, 7, 1}, 2);
  mixed.add({Side::sell, 7, 0}, 3);
  EXPECT_EQ(mixed.engine().sorting_mpc(mixed.items()), (std::vector<OrderId>{3, 2, 1}));
}

TEST(SortingMpc, MatchesPlaintextOracle) {
  Rng rng(51);
  Desk<Ristretto255> d;
  fill_random(d, 64, rng);
  EXPECT_EQ(d.engine().sorting_mpc(d.items()), d.plain_sort());
  const auto& log = d.engine().leakage().entries();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].tag, LeakageTag::sorted_permutation);
  // Only the order and a reconstruction count; no rates.
  std::set<std::string> keys;
  for (const auto& [k, v] : log[0].payload.items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"order", "reconstructions"}));
}

TEST(SettlementMpc, Examples) {
  Desk<Ristretto255> d;
  const auto b10 = d.add({Side::buy, 10, 0});
  const auto s7 = d.add({Side::sell, 7, 0});
  const auto b9 = d.add({Side::buy, 9, 0});
  const auto s9 = d.add({Side::sell, 9, 0});
  auto& e = d.engine();
  EXPECT_EQ(e.settlement_mpc({{b10, s7}}).first, Ristretto255::Scalar::from_u64(3));
  EXPECT_EQ(e.settlement_mpc({{b10, s7}, {b9, s9}}).first, Ristretto255::Scalar::from_u64(3));
  const auto before = e.leakage().size();
  const auto empty = e.settlement_mpc({});
  EXPECT_EQ(empty.first, Ristretto255::Scalar{});
  EXPECT_EQ(empty.second, Ristretto255::Scalar{});
  EXPECT_EQ(e.leakage().size(), before);
}

TEST(SettlementMpc, AggregateMatchesHomomorphicQuotient) {
  using G = Ristretto255;
  Rng rng(52);
  Desk<G> d;
  MatchSet pairs;
  std::int64_t fee = 0;
  for (int i = 0; i < 32; ++i) {
    const auto s = 100 + static_cast<std::int64_t>(rng.below(100));
    const auto b = s + static_cast<std::int64_t>(rng.below(20));
    pairs.push_back({d.add({Side::buy, b, 0}), d.add({Side::sell, s, 0})});
    fee += b - s;
  }
  const auto [f, r] = d.engine().settlement_mpc(pairs);
  EXPECT_EQ(f.to_signed(), fee);
  Commitment<G> quotient{};
  for (const auto& p : pairs) quotient *= d.commitment(p.buy) / d.commitment(p.sell);
  EXPECT_EQ(commit<G>(f, r), quotient);
  const auto& entry = d.engine().leakage().entries().back();
  EXPECT_EQ(entry.tag, LeakageTag::aggregate_fees);
  EXPECT_EQ(entry.payload["fee"], fee);
  EXPECT_EQ(entry.payload["reconstructions"], 2);
}

TEST(TopK, Examples) {
  Desk<Ristretto255> d;
  const auto s1 = d.add({Side::sell, 5, 0});
  const auto s2 = d.add({Side::sell, 5, 0});
  const auto s3 = d.add({Side::sell, 5, 0});
  const auto b10 = d.add({Side::buy, 10, 0});
  const auto b8 = d.add({Side::buy, 8, 0});
  const auto b6 = d.add({Side::buy, 6, 0});
  auto& e = d.engine();
  const auto sorted = e.sorting_mpc(d.items());
  const MatchSet m{{b6, s1}, {b8, s2}, {b10, s3}};
  const auto n = e.leakage().size();
  EXPECT_TRUE(e.topk_reveal(sorted, m, 0).empty());
  EXPECT_EQ(e.leakage().size(), n);
  EXPECT_EQ(e.topk_reveal(sorted, m, 2), (std::vector<std::int64_t>{10, 8}));
  EXPECT_EQ(e.topk_reveal(sorted, m, 9), (std::vector<std::int64_t>{10, 8, 6}));
  EXPECT_EQ(e.topk_reveal(sorted, {{b10, s1}}, 1), (std::vector<std::int64_t>{10}));
  EXPECT_THROW(e.topk_reveal(sorted, m, -1), ParameterError);
}

TEST(Engine, OracleEquivalenceRandomRounds) {
  using G = Schnorr61;
  Rng rng(53);
  for (int round = 0; round < 200; ++round) {
    Desk<G> d(3, 1000 + static_cast<std::uint64_t>(round));
    const std::size_t n = 1 + rng.below(128);
    fill_random(d, n, rng);
    const std::int64_t k = static_cast<std::int64_t>(rng.below(20));
    const auto out = desk::run_round(d, k);
    const auto plain = d.plain_sort();
    ASSERT_EQ(out.sorted, plain);
    const auto book = d.book(plain);
    const auto m = fair_swap(match_orders(book), book);
    ASSERT_EQ(out.matches, m);
    std::int64_t fee = 0;
    std::vector<std::int64_t> buys;
    for (const auto& p : m) {
      fee += d.order(p.buy).intent.rate - d.order(p.sell).intent.rate;
      buys.push_back(d.order(p.buy).intent.rate);
    }
    ASSERT_EQ(out.fee, fee);
    std::sort(buys.rbegin(), buys.rend());
    buys.resize(std::min(buys.size(), static_cast<std::size_t>(k)));
    ASSERT_EQ(out.topk, buys);
  }
}

TEST(Leakage, FullRoundHasOnlyPermittedTags) {
  using G = Schnorr61;
  Rng rng(54);
  Desk<G> d;
  fill_random(d, 40, rng);
  desk::run_round(d, 4);
  std::vector<std::pair<OrderId, Commitment<G>>> accounts;
  for (auto id : d.ids()) accounts.emplace_back(id, commit<G>(1000, G::Scalar::random(rng)));
  d.engine().shuffle_mpc(accounts);
  const auto t = tags(d.engine().leakage());
  EXPECT_EQ(t, (std::multiset<LeakageTag>{LeakageTag::sorted_permutation, LeakageTag::aggregate_fees,
                                          LeakageTag::topk_rates, LeakageTag::shuffled_commitments}));
  for (const auto& e : d.engine().leakage().entries()) EXPECT_GT(e.payload["reconstructions"].get<int>(), 0);
}

TEST(Leakage, NoMatchesMeansNoFeeOrTopK) {
  using G = Schnorr61;
  Desk<G> d;
  d.add({Side::buy, 5, 0});
  d.add({Side::sell, 9, 0});
  const auto out = desk::run_round(d, 16);
  EXPECT_TRUE(out.matches.empty());
  EXPECT_EQ(tags(d.engine().leakage()), (std::multiset<LeakageTag>{LeakageTag::sorted_permutation}));
}

TEST(Gate, ReconstructionOutsideSessionRejected) {
  using G = Schnorr61;
  mpc::ReconstructionGate<G> gate(3);
  mpc::InProcessTransport net(6);
  mpc::Writer w;
  w.u64(1).u8(static_cast<std::uint8_t>(mpc::GateOp::open));
  mpc::PartySet{{1, 2, 3}}.write(w);
  EXPECT_THROW(gate.handle(4, w.frame(mpc::Tag::gate_expect), net), ProtocolAbort);

  // A sort session may not open values.
  mpc::Writer open;
  open.u8(static_cast<std::uint8_t>(LeakageTag::sorted_permutation)).u64(0);
  gate.handle(4, open.frame(mpc::Tag::session_open), net);
  mpc::Writer w2;
  w2.u64(2).u8(static_cast<std::uint8_t>(mpc::GateOp::open));
  mpc::PartySet{{1, 2, 3}}.write(w2);
  EXPECT_THROW(gate.handle(4, w2.frame(mpc::Tag::gate_expect), net), ProtocolAbort);
  EXPECT_TRUE(gate.log().entries().empty());
}

template <class G>
class Validation : public ::testing::Test {};
using ValidationGroups = ::testing::Types<TinyGroup, Ristretto255>;
TYPED_TEST_SUITE(Validation, ValidationGroups);

TYPED_TEST(Validation, HonestBrokersAllPass) {
  using G = TypeParam;
  Rng rng(55);
  for (int t = 0; t < 20; ++t) {
    Desk<G> d(3, 2000 + static_cast<std::uint64_t>(t));
    fill_random(d, 8, rng, 0, 7);
    for (auto kind : {ValidationKind::rate, ValidationKind::rerandomization})
      EXPECT_EQ(d.engine().input_share_validation(d.ids(), d.share_commitments(kind), kind),
                std::vector<bool>(3, true));
  }
}

TYPED_TEST(Validation, EveryTamperIsPinnedOnItsBroker) {
  using G = TypeParam;
  using K = BrokerFault::Kind;
  struct Case {
    K kind;
    ValidationKind caught_by;
  };
  const Case cases[] = {{K::tamper_rate, ValidationKind::rate},
                        {K::tamper_rate_blinding, ValidationKind::rate},
                        {K::tamper_rerand, ValidationKind::rerandomization},
                        {K::tamper_rerand_blinding, ValidationKind::rerandomization}};
  Rng rng(56);
  for (std::size_t broker = 0; broker < 3; ++broker) {
    for (const auto& c : cases) {
      for (OrderId target = 1; target <= 8; ++target) {
        Desk<G> d(3, 3000 + target);
        d.engine().broker(broker).set_fault({c.kind, target, 1 + static_cast<std::int64_t>(rng.below(9)), {}});
        fill_random(d, 8, rng, 0, 7);
        for (auto kind : {ValidationKind::rate, ValidationKind::rerandomization}) {
          std::vector<bool> expected(3, true);
          if (kind == c.caught_by) expected[broker] = false;
          EXPECT_EQ(d.engine().input_share_validation(d.ids(), d.share_commitments(kind), kind), expected)
              << "broker " << broker << " order " << target;
        }
      }
    }
  }
}

TEST(RialtoPlus, SilentBrokerNarrowsOrAborts) {
  using G = Schnorr61;
  Rng rng(57);
  {
    Desk<G> d(5, SharingParams::honest_majority(5), 7);
    fill_random(d, 20, rng);
    d.engine().broker(3).set_fault({BrokerFault::Kind::silent, {}, 1, {}});
    EXPECT_EQ(d.engine().sorting_mpc(d.items()), d.plain_sort());
    EXPECT_EQ(d.engine().active_parties(), (std::vector<std::size_t>{1, 2, 3, 5}));
  }
  {
    Desk<G> d(5, SharingParams::honest_majority(5), 8);
    fill_random(d, 20, rng);
    for (std::size_t b : {0u, 2u, 4u}) d.engine().broker(b).set_fault({BrokerFault::Kind::silent, {}, 1, {}});
    try {
      d.engine().sorting_mpc(d.items());
      FAIL() << "expected abort";
    } catch (const ProtocolAbort& e) {
      EXPECT_NE(e.broker(), ProtocolAbort::kNoBroker);
    }
  }
  {
    Desk<G> d(3, 9);
    fill_random(d, 10, rng);
    d.engine().broker(1).set_fault({BrokerFault::Kind::silent, {}, 1, {}});
    try {
      d.engine().sorting_mpc(d.items());
      FAIL() << "expected abort";
    } catch (const ProtocolAbort& e) {
      EXPECT_EQ(e.broker(), 1u);
    }
  }
}

TEST(RialtoPlus, TamperedBrokerExcludedAfterValidation) {
  using G = Schnorr61;
  Rng rng(58);
  Desk<G> d(5, SharingParams::honest_majority(5), 10);
  d.engine().broker(2).set_fault({BrokerFault::Kind::tamper_rate, {}, 5, {}});
  fill_random(d, 30, rng);
  const auto h = d.engine().input_share_validation(d.ids(), d.share_commitments(ValidationKind::rate), ValidationKind::rate);
  EXPECT_EQ(h, (std::vector<bool>{true, true, false, true, true}));
  d.engine().select_parties(h);
  EXPECT_EQ(d.engine().sorting_mpc(d.items()), d.plain_sort());
}

TEST(Engine, MissingShareAbortsNamingBroker) {
  using G = Schnorr61;
  Rng rng(59);
  Desk<G> d(3, 11);
  d.engine().broker(2).set_fault({BrokerFault::Kind::withhold_share, 4, 1, {}});
  fill_random(d, 8, rng);
  try {
    d.engine().sorting_mpc(d.items());
    FAIL() << "expected abort";
  } catch (const ProtocolAbort& e) {
    EXPECT_EQ(e.broker(), 2u);
  }
}

TEST(Engine, SocketTransportGivesSameResults) {
  using G = Schnorr61;
  auto run = [](mpc::TransportKind kind) {
    Rng rng(60);
    Desk<G> d(3, SharingParams::additive(3), 12, kind);
    fill_random(d, 48, rng);
    return desk::run_round(d, 8);
  };
  const auto a = run(mpc::TransportKind::in_process);
  const auto b = run(mpc::TransportKind::loopback_socket);
  EXPECT_EQ(a.sorted, b.sorted);
  EXPECT_EQ(a.matches, b.matches);
  EXPECT_EQ(a.fee, b.fee);
  EXPECT_EQ(a.topk, b.topk);
}

TEST(Shuffle, SingleBrokerIdentityIsNoOp) {
  using G = Ristretto255;
  Desk<G> d(1, SharingParams::additive(1), 13);
  d.set_zero_rerand(true);
  d.engine().broker(0).set_fault({BrokerFault::Kind::fixed_network, {}, 1, identity_permutation(4)});
  std::vector<std::pair<OrderId, Commitment<G>>> accounts;
  Rng rng(61);
  for (int i = 0; i < 4; ++i) {
    const auto id = d.add({Side::buy, 10, 0});
    accounts.emplace_back(id, commit<G>(100 + i, G::Scalar::random(rng)));
  }
  const auto out = d.engine().shuffle_mpc(accounts);
  ASSERT_EQ(out.commitments.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.commitments[i], accounts[i].second);
}

TEST(Shuffle, TrackedBlindingsRecoverBalances) {
  using G = Ristretto255;
  Rng rng(62);
  for (int t = 0; t < 20; ++t) {
    Desk<G> d(3, 4000 + static_cast<std::uint64_t>(t));
    std::vector<std::pair<OrderId, Commitment<G>>> accounts;
    std::map<OrderId, Opening<G>> openings;
    for (int i = 0; i < 4; ++i) {
      const auto id = d.add({Side::buy, 10, 0});
      Opening<G> o{500 + static_cast<std::int64_t>(rng.below(100)), G::Scalar::random(rng)};
      openings[id] = o;
      accounts.emplace_back(id, o.commitment());
    }
    const auto out = d.engine().shuffle_mpc(accounts);
    std::multiset<std::string> expected, got;
    for (const auto& [id, o] : openings) {
      const Opening<G> fresh{o.value, o.blinding + d.order(id).rerand};
      expected.insert(fresh.commitment().hex());
    }
    for (const auto& c : out.commitments) got.insert(c.hex());
    EXPECT_EQ(got, expected);
    EXPECT_TRUE(out.flagged_brokers.empty());
  }
}

TEST(Shuffle, ComposesBrokerNetworksInOrder) {
  using G = Schnorr61;
  const Permutation p1{2, 0, 3, 1, 4}, p2{4, 3, 2, 1, 0}, p3{1, 2, 3, 4, 0};
  Desk<G> d(3, 14);
  d.engine().broker(0).set_fault({BrokerFault::Kind::fixed_network, {}, 1, p1});
  d.engine().broker(1).set_fault({BrokerFault::Kind::fixed_network, {}, 1, p2});
  d.engine().broker(2).set_fault({BrokerFault::Kind::fixed_network, {}, 1, p3});
  Rng rng(63);
  std::vector<std::pair<OrderId, Commitment<G>>> accounts;
  std::vector<Commitment<G>> rerandomized;
  for (int i = 0; i < 5; ++i) {
    const auto id = d.add({Side::sell, 10, 0});
    const Opening<G> o{i, G::Scalar::random(rng)};
    accounts.emplace_back(id, o.commitment());
    rerandomized.push_back(commit<G>(o.value, o.blinding + d.order(id).rerand));
  }
  const auto out = d.engine().shuffle_mpc(accounts);
  const auto total = compose(compose(p1, p2), p3);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(out.commitments[j], rerandomized[total[j]]);
}

TEST(Shuffle, MalformedNetworkIsFlagged) {
  using G = Schnorr61;
  Desk<G> d(3, 15);
  d.engine().broker(1).set_fault({BrokerFault::Kind::malformed_network, {}, 1, {}});
  Rng rng(64);
  std::vector<std::pair<OrderId, Commitment<G>>> accounts;
  std::multiset<std::string> expected;
  for (int i = 0; i < 6; ++i) {
    const auto id = d.add({Side::sell, 10, 0});
    const Opening<G> o{i, G::Scalar::random(rng)};
    accounts.emplace_back(id, o.commitment());
    expected.insert(commit<G>(o.value, o.blinding + d.order(id).rerand).hex());
  }
  const auto out = d.engine().shuffle_mpc(accounts);
  EXPECT_EQ(out.flagged_brokers, (std::vector<std::size_t>{1}));
  std::multiset<std::string> got;
  for (const auto& c : out.commitments) got.insert(c.hex());
  EXPECT_EQ(got, expected);
  EXPECT_EQ(d.engine().leakage().entries().back().payload["flagged_brokers"], nlohmann::json::array({1}));
}

TEST(Frames, RoundTripAndTruncation) {
  mpc::Writer w;
  w.u64(42).u32(7).boolean(true).str("abc");
  auto bytes = mpc::encode_frame(w.frame(mpc::Tag::open_request));
  bytes.push_back(0);  // start of a following frame
  auto f = mpc::take_frame(bytes);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->tag, mpc::Tag::open_request);
  mpc::Reader r(f->payload);
  EXPECT_EQ(r.u64(), 42u);
  EXPECT_EQ(r.u32(), 7u);
  EXPECT_TRUE(r.boolean());
  EXPECT_EQ(r.str(), "abc");
  EXPECT_THROW(r.u8(), ProtocolAbort);
  EXPECT_EQ(bytes.size(), 1u);
  EXPECT_FALSE(mpc::take_frame(bytes).has_value());
}
