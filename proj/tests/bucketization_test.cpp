#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rialto/bucketization.hpp"
#include "rialto/group/ristretto255.hpp"

using namespace rialto;
using G = rialto::group::Ristretto255;
using S = G::Scalar;

namespace {

Digest256 fake_block(std::uint64_t i) { return sha256("block-" + std::to_string(i)); }

// Two traders with one order each on a test-mode ledger.
struct Pair {
  Ledger<G> ledger{{kDefaultRangeBits, true}};
  Rng rng{91};
  PairParty<G> buyer, seller;
  AccountSlot buyer_slot = 0, seller_slot = 0;

  Pair(std::int64_t buy_rate, std::int64_t sell_rate, std::int64_t balance = 100) {
    ledger.begin_round(0);
    Opening<G> bw{balance, S::random(rng)}, sw{balance, S::random(rng)};
    buyer_slot = ledger.open_account(bw.commitment(), bw);
    seller_slot = ledger.open_account(sw.commitment(), sw);
    buyer = make(buyer_slot, Side::buy, buy_rate, bw);
    seller = make(seller_slot, Side::sell, sell_rate, sw);
  }

  PairParty<G> make(AccountSlot slot, Side side, std::int64_t rate, const Opening<G>& wallet) {
    PairParty<G> p;
    p.rate = rate;
    p.blinding = S::random(rng);
    p.keys = TraderKeys::generate(rng);
    const Opening<G> ro{rate, p.blinding};
    Ledger<G>::Submission sub;
    sub.side = side;
    sub.account = slot;
    sub.share_commitments = {ro.commitment()};
    sub.tracked_rate = ro;
    if (side == Side::buy) {
      const auto rest = wallet - ro;
      sub.balance_proof = prove_range<G>(rest.value, rest.blinding, kDefaultRangeBits,
                                         Ledger<G>::balance_proof_context(slot, 0), rng);
    }
    p.order = ledger.submit_order(sub);
    return p;
  }

  std::int64_t balance(AccountSlot s) const { return ledger.account(s).tracked->value; }
  std::int64_t fees() const { return ledger.marketplace().tracked->value; }
};

}  // namespace

TEST(Buckets, ChooseIsDeterministic) {
  EXPECT_EQ(choose_buckets(4, fake_block(1)), choose_buckets(4, fake_block(1)));
  EXPECT_EQ(choose_buckets(1, fake_block(2)).offset, 0);
  EXPECT_THROW(choose_buckets(0, fake_block(3)), ParameterError);
  EXPECT_THROW(choose_buckets(-2, fake_block(3)), ParameterError);
}

TEST(Buckets, OffsetsUniform) {
  std::vector<std::size_t> counts(4);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto g = choose_buckets(4, fake_block(i));
    ASSERT_GE(g.offset, 0);
    ASSERT_LT(g.offset, 4);
    ++counts[static_cast<std::size_t>(g.offset)];
  }
  EXPECT_GT(oracle::chi_square_uniform_p(counts), 0.01);
}

TEST(Buckets, HalfOpenBoundaries) {
  const BucketGrid grid{4, 2};
  EXPECT_EQ(grid.index_of(10), 2);
  EXPECT_EQ(grid.floor_of(2), 10);
  EXPECT_EQ(grid.ceiling_of(2), 14);
  EXPECT_EQ(grid.index_of(13), 2);
  EXPECT_EQ(grid.index_of(14), 3);
  EXPECT_EQ(grid.index_of(1), -1);
  EXPECT_TRUE(grid.contains(2, 10));
  EXPECT_FALSE(grid.contains(2, 14));
  EXPECT_EQ(bucket_proof_bits(1), 1u);
  EXPECT_EQ(bucket_proof_bits(2), 1u);
  EXPECT_EQ(bucket_proof_bits(4), 2u);
  EXPECT_EQ(bucket_proof_bits(5), 3u);
  EXPECT_EQ(bucket_proof_bits(16), 4u);
}

TEST(Buckets, ClaimExample) {
  Rng rng(92);
  const auto r = S::random(rng);
  const auto c = commit<G>(10, r);
  const BucketGrid grid{4, 2};
  const auto claim = assign_bucket<G>(10, r, c, grid, "b", rng);
  EXPECT_EQ(claim.index, 2);
  EXPECT_TRUE(verify_bucket<G>(c, grid, 2, claim.proof, "b"));
  EXPECT_FALSE(verify_bucket<G>(c, grid, 2, claim.proof, "other"));
  EXPECT_THROW(assign_bucket<G>(11, r, c, grid, "b", rng), ParameterError);
}

TEST(Buckets, SoundnessSweep) {
  Rng rng(93);
  for (std::int64_t w : {2, 4, 8, 16}) {
    const BucketGrid grid{w, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(w)))};
    for (std::int64_t rate = 3 * w; rate < 6 * w; ++rate) {
      const auto r = S::random(rng);
      const auto c = commit<G>(rate, r);
      const auto claim = assign_bucket<G>(rate, r, c, grid, "sweep", rng);
      ASSERT_TRUE(grid.contains(claim.index, rate));
      ASSERT_TRUE(verify_bucket<G>(c, grid, claim.index, claim.proof, "sweep"));
      for (std::int64_t other = claim.index - 2; other <= claim.index + 2; ++other) {
        if (other == claim.index) continue;
        // Replaying the honest proof under another label fails.
        ASSERT_FALSE(verify_bucket<G>(c, grid, other, claim.proof, "sweep")) << w << " " << rate << " " << other;
        // Building one from scratch needs a negative range value.
        const auto lo = grid.floor_of(other), hi = grid.ceiling_of(other) - 1;
        const auto bits = bucket_proof_bits(w);
        EXPECT_TRUE(rate < lo || rate > hi);
        if (rate < lo) {
          EXPECT_THROW(prove_range<G>(rate - lo, r, bits, "sweep", rng), RangeProofError);
        } else {
          EXPECT_THROW(prove_range<G>(hi - rate, -r, bits, "sweep", rng), RangeProofError);
        }
      }
    }
  }
}

TEST(Exchange, SealedOpeningRoundTrip) {
  Rng rng(94);
  const auto alice = TraderKeys::generate(rng), bob = TraderKeys::generate(rng), eve = TraderKeys::generate(rng);
  const auto r = S::random(rng);
  const auto sealed = seal_opening<G>(5, 42, r, alice, bob.box_pk, rng);
  Rng a(7), b(7);
  EXPECT_EQ(seal_opening<G>(5, 42, r, alice, bob.box_pk, a), seal_opening<G>(5, 42, r, alice, bob.box_pk, b));
  const auto got = open_sealed<G>(sealed, bob, alice.sign_pk);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->order, 5u);
  EXPECT_EQ(got->rate, 42);
  EXPECT_EQ(S::from_bytes(got->blinding), r);
  EXPECT_FALSE(is_valid_deviation<G>(*got, alice.sign_pk, commit<G>(42, r)));
  EXPECT_TRUE(is_valid_deviation<G>(*got, alice.sign_pk, commit<G>(43, r)));
  // A deviation report needs the accused's signature.
  EXPECT_FALSE(is_valid_deviation<G>(*got, eve.sign_pk, commit<G>(43, r)));

  EXPECT_FALSE(open_sealed<G>(sealed, eve, alice.sign_pk).has_value());
  EXPECT_FALSE(open_sealed<G>(sealed, bob, eve.sign_pk).has_value());
  auto flipped = sealed;
  flipped.back() ^= 1;
  EXPECT_FALSE(open_sealed<G>(flipped, bob, alice.sign_pk).has_value());
  // Forged evidence: the victim edits the signed message.
  auto forged = *got;
  forged.message.back() ^= 1;
  EXPECT_FALSE(is_valid_deviation<G>(forged, alice.sign_pk, commit<G>(42, r)));
}

TEST(Settle, DifferenceExamples) {
  {
    Pair p(10, 7);
    const auto out = settle_difference(p.ledger, p.buyer, p.seller, {}, p.rng);
    EXPECT_TRUE(out.settled);
    EXPECT_EQ(out.fee, 3);
    EXPECT_EQ(p.fees(), 3);
    EXPECT_EQ(p.balance(p.seller_slot), 107);
    EXPECT_EQ(p.balance(p.buyer_slot), 90);
    EXPECT_EQ(p.ledger.tracked_total(), 200);
    EXPECT_TRUE(p.ledger.tracked_consistent());
  }
  {
    Pair p(7, 7);
    const auto out = settle_difference(p.ledger, p.buyer, p.seller, {}, p.rng);
    EXPECT_EQ(out.fee, 0);
    EXPECT_EQ(p.fees(), 0);
    EXPECT_EQ(p.balance(p.seller_slot), 107);
  }
}

TEST(Settle, MeanExamples) {
  struct Case {
    std::int64_t buy, sell, settle, fee, buyer_after;
  };
  for (const auto& c : {Case{10, 6, 8, 0, 92}, Case{10, 7, 8, 1, 91}, Case{7, 7, 7, 0, 93}}) {
    Pair p(c.buy, c.sell);
    const auto out = settle_mean(p.ledger, p.buyer, p.seller, {}, p.rng);
    EXPECT_TRUE(out.settled);
    EXPECT_EQ(out.settle_rate, c.settle);
    EXPECT_EQ(out.fee, c.fee);
    EXPECT_EQ(p.fees(), c.fee);
    EXPECT_EQ(p.balance(p.seller_slot), 100 + c.settle);
    EXPECT_EQ(p.balance(p.buyer_slot), c.buyer_after);
    EXPECT_EQ(p.ledger.tracked_total(), 200);
    EXPECT_TRUE(p.ledger.tracked_consistent());
  }
}

TEST(Settle, LyingSellerPenalized) {
  for (auto scheme : {SettlementScheme::difference, SettlementScheme::mean}) {
    Pair p(10, 7);
    p.seller.claimed_rate = 6;
    const auto out = scheme == SettlementScheme::difference ? settle_difference(p.ledger, p.buyer, p.seller, {5}, p.rng)
                                                            : settle_mean(p.ledger, p.buyer, p.seller, {5}, p.rng);
    EXPECT_FALSE(out.settled);
    EXPECT_EQ(out.cheater, p.seller.order);
    EXPECT_TRUE(p.ledger.account(p.seller_slot).flagged);
    EXPECT_EQ(p.balance(p.seller_slot), 95);
    EXPECT_EQ(p.balance(p.buyer_slot), 100);  // escrow refunded
    EXPECT_EQ(p.fees(), 5);
    EXPECT_EQ(p.ledger.escrows().at(p.buyer.order).state, EscrowState::refunded);
    EXPECT_EQ(p.ledger.tracked_total(), 200);
    EXPECT_TRUE(p.ledger.open_orders().empty());
  }
}

TEST(Settle, LyingBuyerForfeitsEscrow) {
  Pair p(10, 7);
  p.buyer.claimed_rate = 9;
  const auto out = settle_difference(p.ledger, p.buyer, p.seller, {}, p.rng);
  EXPECT_EQ(out.cheater, p.buyer.order);
  EXPECT_EQ(p.ledger.escrows().at(p.buyer.order).state, EscrowState::forfeited);
  EXPECT_EQ(p.balance(p.buyer_slot), 90);
  EXPECT_EQ(p.balance(p.seller_slot), 100);
  EXPECT_EQ(p.fees(), 10);
  EXPECT_EQ(p.ledger.tracked_total(), 200);
  std::size_t reports = 0;
  for (const auto& e : p.ledger.chain().pending()) reports += e["type"] == "deviation_reported";
  EXPECT_EQ(reports, 1u);
}

TEST(Settle, ConservationBothSchemes) {
  Rng rng(95);
  for (int t = 0; t < 40; ++t) {
    const auto sell = 100 + static_cast<std::int64_t>(rng.below(50));
    const auto buy = sell + static_cast<std::int64_t>(rng.below(10));
    Pair p(buy, sell, 1000);
    const auto out = t % 2 ? settle_mean(p.ledger, p.buyer, p.seller, {}, p.rng)
                           : settle_difference(p.ledger, p.buyer, p.seller, {}, p.rng);
    ASSERT_TRUE(out.settled);
    ASSERT_EQ(p.ledger.tracked_total(), 2000);
    ASSERT_TRUE(p.ledger.tracked_consistent());
    ASSERT_EQ(p.balance(p.seller_slot), 1000 + out.settle_rate);
  }
}
