#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rialto/rng.hpp"
#include "rialto/sim/config.hpp"
#include "rialto/types.hpp"

namespace rialto::sim {

struct Intent {
  Side side = Side::buy;
  std::int64_t rate = 0;

  friend bool operator==(const Intent&, const Intent&) = default;
};

/// Integer rate range of one side, inclusive.
struct RateRange {
  std::int64_t low = 0;
  std::int64_t high = 0;
};

/// Uniform bounds for `side`. In spread mode both sides share the mean and
/// the gap between lowest ask and highest bid is spread * mean.
inline RateRange uniform_range(const ExperimentConfig& c, Side side) {
  if (c.spread) {
    const double mid = (c.buyer_mean + c.seller_mean) / 2.0;
    const double half = *c.spread * mid / 2.0;
    return {std::lround(mid - half), std::lround(mid + half)};
  }
  const double mean = side == Side::buy ? c.buyer_mean : c.seller_mean;
  const auto half = std::lround(std::sqrt(3.0 * c.sigma() * c.sigma()));
  return {std::lround(mean) - half, std::lround(mean) + half};
}

inline std::int64_t draw_rate(const ExperimentConfig& c, Side side, Rng& rng) {
  std::int64_t rate;
  if (c.distribution == RateDistribution::uniform) {
    const auto r = uniform_range(c, side);
    rate = r.low + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(r.high - r.low + 1)));
  } else {
    const double mean = c.spread ? (c.buyer_mean + c.seller_mean) / 2.0 : (side == Side::buy ? c.buyer_mean : c.seller_mean);
    std::normal_distribution<double> dist(mean, c.sigma());
    rate = std::llround(dist(rng));
  }
  return std::max<std::int64_t>(rate, 1);
}

inline std::vector<Intent> generate_orders(const ExperimentConfig& c, Rng& rng) {
  std::poisson_distribution<std::size_t> count(c.orders_per_round);
  const std::size_t n = count(rng);
  std::vector<Intent> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Side side = rng.below(2) == 0 ? Side::buy : Side::sell;
    out.push_back({side, draw_rate(c, side, rng)});
  }
  return out;
}

/// Intent stream of `round`, independent of protocol and of earlier rounds.
inline std::vector<Intent> round_intents(const ExperimentConfig& c, std::uint64_t round) {
  Rng rng = Rng(c.seed).fork("intents", round);
  return generate_orders(c, rng);
}

}  // namespace rialto::sim
