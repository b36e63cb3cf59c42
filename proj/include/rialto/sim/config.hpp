#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rialto/bucketization.hpp"
#include "rialto/errors.hpp"
#include "rialto/mpc/transport.hpp"
#include "rialto/privacy.hpp"

namespace rialto::sim {

enum class Protocol { centralized, zero_privacy, semi_private, offchain_matching, bucketization, rialto, rialto_plus };
enum class RateDistribution { uniform, normal };
enum class MatchingRule { maximal_fair, price_time };

inline std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::centralized: return "centralized";
    case Protocol::zero_privacy: return "zero-privacy";
    case Protocol::semi_private: return "semi-private";
    case Protocol::offchain_matching: return "offchain-matching";
    case Protocol::bucketization: return "bucketization";
    case Protocol::rialto: return "rialto";
    case Protocol::rialto_plus: return "rialto-plus";
  }
  return "?";
}
inline std::string_view to_string(RateDistribution d) { return d == RateDistribution::uniform ? "uniform" : "normal"; }
inline std::string_view to_string(MatchingRule m) { return m == MatchingRule::maximal_fair ? "maximal-fair" : "price-time"; }
inline std::string_view to_string(SettlementScheme s) { return s == SettlementScheme::difference ? "difference" : "mean"; }

inline bool is_plaintext(Protocol p) {
  return p == Protocol::centralized || p == Protocol::zero_privacy || p == Protocol::semi_private ||
         p == Protocol::offchain_matching;
}
inline bool is_mpc(Protocol p) { return p == Protocol::rialto || p == Protocol::rialto_plus; }

enum class GroupBackend { ristretto255, schnorr61 };

struct ExperimentConfig {
  Protocol protocol = Protocol::rialto;
  double orders_per_round = 512;  // Poisson mean
  std::uint64_t rounds = 12;
  std::size_t brokers = 3;
  std::int64_t top_k = 16;
  std::int64_t bucket_width = 4;
  RateDistribution distribution = RateDistribution::uniform;
  double buyer_mean = 255;
  double seller_mean = 245;
  double variance = 15;
  bool variance_is_stddev = false;
  std::optional<double> spread = 0.04;  // quoted spread as a fraction; recenters both sides
  std::uint64_t max_unmatched_rounds = 0;
  MatchingRule matching = MatchingRule::maximal_fair;
  SettlementScheme settlement = SettlementScheme::difference;
  VarianceScaling bucket_variance = VarianceScaling::bessel;
  std::uint64_t seed = 1;
  double round_seconds = 30;

  // runtime knobs, not part of the experiment's identity
  GroupBackend group = GroupBackend::ristretto255;
  mpc::TransportKind transport = mpc::TransportKind::in_process;
  bool test_mode = false;
  std::size_t traders = 0;  // 0: twice the mean order count
  std::int64_t initial_balance = 100000;
  std::size_t range_bits = kDefaultRangeBits;

  std::size_t trader_count() const {
    return traders ? traders : static_cast<std::size_t>(std::ceil(2 * orders_per_round)) + 2;
  }
  double sigma() const { return variance_is_stddev ? variance : std::sqrt(variance); }

  void validate() const {
    if (!(orders_per_round > 0)) throw ParameterError("orders per round must be positive");
    if (rounds == 0) throw ParameterError("rounds must be positive");
    if (brokers == 0) throw ParameterError("brokers must be positive");
    if (top_k < 0) throw ParameterError("top-K must be non-negative");
    if (bucket_width < 1) throw ParameterError("bucket width must be at least 1");
    if (!(variance > 0)) throw ParameterError("variance must be positive");
    if (spread && !(*spread > 0 && *spread < 1)) throw ParameterError("spread must lie in (0, 1)");
    if (matching == MatchingRule::price_time && !is_plaintext(protocol))
      throw ParameterError("price-time matching needs plaintext rates");
    if (is_mpc(protocol) && protocol == Protocol::rialto_plus && brokers < 2)
      throw ParameterError("rialto-plus needs at least two brokers");
    if (trader_count() < 2) throw ParameterError("need at least two traders");
    if (initial_balance <= 0) throw ParameterError("initial balance must be positive");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["protocol"] = to_string(protocol);
    j["orders_per_round"] = orders_per_round;
    j["rounds"] = rounds;
    j["brokers"] = brokers;
    j["top_k"] = top_k;
    j["bucket_width"] = bucket_width;
    j["distribution"] = to_string(distribution);
    j["buyer_mean"] = buyer_mean;
    j["seller_mean"] = seller_mean;
    j["variance"] = variance;
    j["spread"] = spread ? nlohmann::ordered_json(*spread) : nlohmann::ordered_json(nullptr);
    j["max_unmatched_rounds"] = max_unmatched_rounds;
    j["matching"] = to_string(matching);
    j["settlement"] = to_string(settlement);
    j["seed"] = seed;
    j["group"] = group == GroupBackend::ristretto255 ? "ristretto255" : "schnorr61";
    j["traders"] = trader_count();
    return j;
  }
};

inline Protocol parse_protocol(std::string_view s) {
  for (auto p : {Protocol::centralized, Protocol::zero_privacy, Protocol::semi_private, Protocol::offchain_matching,
                 Protocol::bucketization, Protocol::rialto, Protocol::rialto_plus})
    if (to_string(p) == s) return p;
  throw ParameterError("unknown protocol '" + std::string(s) + "'");
}

}  // namespace rialto::sim
