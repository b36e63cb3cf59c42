#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "rialto/errors.hpp"
#include "rialto/waksman.hpp"

using namespace rialto;

namespace {

// Closed form of the recursive bound: sum_{i=1..N} ceil(log2 i).
std::size_t gate_bound(std::size_t n) {
  std::size_t total = 0;
  for (std::size_t i = 2; i <= n; ++i) total += static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(i))));
  return total;
}

std::size_t perm_index(const Permutation& p) {
  // Lehmer code.
  std::size_t idx = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = i + 1; j < p.size(); ++j) smaller += p[j] < p[i];
    idx = idx * (p.size() - i) + smaller;
  }
  return idx;
}

PermutationNetwork with_bits(const PermutationNetwork& shape, unsigned mask) {
  auto net = shape;
  for (std::size_t g = 0; g < net.gates.size(); ++g) net.gates[g].cross = (mask >> g) & 1U;
  return net;
}

}  // namespace

TEST(Waksman, TwoWire) {
  const auto swap = build_network({1, 0});
  ASSERT_EQ(swap.gates.size(), 1u);
  EXPECT_TRUE(swap.gates[0].cross);
  const auto id = build_network({0, 1});
  ASSERT_EQ(id.gates.size(), 1u);
  EXPECT_FALSE(id.gates[0].cross);
}

TEST(Waksman, TrivialSizes) {
  Rng rng(41);
  EXPECT_TRUE(sample_uniform_network(1, rng).gates.empty());
  EXPECT_TRUE(build_network({}).gates.empty());
  EXPECT_EQ(apply_network(build_network({0}), std::vector<int>{9}), std::vector<int>{9});
}

TEST(Waksman, RejectsBadInput) {
  EXPECT_THROW(build_network({0, 0, 1}), ParameterError);
  EXPECT_THROW(build_network({0, 3, 1}), ParameterError);
  const auto net = build_network({1, 2, 0});
  EXPECT_THROW(apply_network(net, std::vector<int>{1, 2}), ParameterError);
}

TEST(Waksman, GateCountMatchesBound) {
  for (std::size_t n = 1; n <= 70; ++n) {
    EXPECT_EQ(waksman_gate_count(n), gate_bound(n)) << n;
    EXPECT_EQ(build_network(identity_permutation(n)).gates.size(), gate_bound(n)) << n;
  }
  for (std::size_t n : {2u, 4u, 8u, 16u, 32u}) {
    const auto lg = static_cast<std::size_t>(std::log2(n));
    EXPECT_EQ(waksman_gate_count(n), n * lg - n + 1);
  }
}

TEST(Waksman, RoundTrip) {
  Rng rng(42);
  for (std::size_t n : {2u, 3u, 4u, 5u, 7u, 8u, 16u, 33u, 64u, 70u}) {
    for (int t = 0; t < 500; ++t) {
      const auto p = sample_uniform_permutation(n, rng);
      const auto net = build_network(p);
      ASSERT_EQ(network_permutation(net), p) << n;
      ASSERT_TRUE(has_canonical_topology(net));
    }
  }
}

TEST(Waksman, ApplyLeavesValuesUntouched) {
  const Permutation p{2, 0, 3, 1};
  const std::vector<std::string> xs{"a", "b", "c", "d"};
  EXPECT_EQ(apply_network(build_network(p), xs), (std::vector<std::string>{"c", "a", "d", "b"}));
  EXPECT_EQ(apply_network(build_network(identity_permutation(4)), xs), xs);
}

TEST(Waksman, Composition) {
  Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    const auto p1 = sample_uniform_permutation(8, rng);
    const auto p2 = sample_uniform_permutation(8, rng);
    std::vector<int> xs(8);
    for (auto& x : xs) x = static_cast<int>(rng.below(1000));
    const auto staged = apply_network(build_network(p2), apply_network(build_network(p1), xs));
    EXPECT_EQ(staged, apply_network(build_network(compose(p1, p2)), xs));
    std::vector<int> direct(8);
    const auto c = compose(p1, p2);
    for (std::size_t j = 0; j < 8; ++j) direct[j] = xs[c[j]];
    EXPECT_EQ(staged, direct);
  }
}

TEST(Waksman, FourWireBruteForce) {
  const auto shape = build_network(identity_permutation(4));
  ASSERT_EQ(shape.gates.size(), 5u);
  std::map<Permutation, std::vector<unsigned>> realized;
  for (unsigned mask = 0; mask < 32; ++mask) realized[network_permutation(with_bits(shape, mask))].push_back(mask);
  // Every permutation is reachable; 32 settings over 24 permutations.
  EXPECT_EQ(realized.size(), 24u);

  const Permutation target{2, 0, 3, 1};
  const auto routed = build_network(target);
  unsigned mask = 0;
  for (std::size_t g = 0; g < routed.gates.size(); ++g) mask |= static_cast<unsigned>(routed.gates[g].cross) << g;
  const auto& options = realized.at(target);
  EXPECT_NE(std::find(options.begin(), options.end(), mask), options.end());
  for (auto m : options) EXPECT_EQ(network_permutation(with_bits(shape, m)), target);
}

TEST(Waksman, ThreeWireCoverage) {
  Rng rng(44);
  std::set<Permutation> seen;
  for (int t = 0; t < 200; ++t) seen.insert(network_permutation(sample_uniform_network(3, rng)));
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Waksman, UniformSamplingChiSquare) {
  Rng rng(45);
  std::vector<std::size_t> counts(24);
  for (int t = 0; t < 24000; ++t) ++counts[perm_index(network_permutation(sample_uniform_network(4, rng)))];
  EXPECT_GT(oracle::chi_square_uniform_p(counts), 0.01);
}

TEST(Waksman, OneHonestNetworkSuffices) {
  Rng rng(46);
  const auto fixed_a = build_network({3, 2, 1, 0});
  const auto fixed_b = build_network({0, 1, 2, 3});
  const auto fixed_c = build_network({1, 3, 0, 2});
  std::vector<std::size_t> before(24), middle(24), after(24);
  for (int t = 0; t < 24000; ++t) {
    const auto honest = sample_uniform_network(4, rng);
    const auto id = identity_permutation(4);
    ++before[perm_index(apply_network(fixed_a, apply_network(fixed_b, apply_network(honest, id))))];
    ++middle[perm_index(apply_network(fixed_c, apply_network(honest, apply_network(fixed_a, id))))];
    ++after[perm_index(apply_network(honest, apply_network(fixed_c, apply_network(fixed_b, id))))];
  }
  EXPECT_GT(oracle::chi_square_uniform_p(before), 0.01);
  EXPECT_GT(oracle::chi_square_uniform_p(middle), 0.01);
  EXPECT_GT(oracle::chi_square_uniform_p(after), 0.01);
}
