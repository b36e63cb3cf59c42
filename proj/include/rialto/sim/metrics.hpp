#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "rialto/matching.hpp"

namespace rialto::sim {

struct Durations {
  double wait = 0;  // logical: half the round time
  double sort = 0;
  double match = 0;
  double settle = 0;
  double shuffle = 0;
};

struct RoundMetrics {
  std::uint64_t round = 0;
  std::size_t submitted = 0;
  std::size_t book = 0;  // submitted plus carried over
  std::size_t matched = 0;  // orders, two per pair
  double matched_pct = 0;
  std::int64_t fees = 0;
  std::int64_t settled_worth = 0;  // what matched buyers paid
  double fee_pct = 0;
  std::size_t expired = 0;
  bool aborted = false;
  std::vector<std::size_t> flagged_brokers;
  MatchSet matches;
  std::vector<std::int64_t> topk;
  double true_mean = 0;
  double true_sigma = 0;
  std::optional<double> gain_trader;
  std::optional<double> gain_broker;
  Durations seconds;

  void finish() {
    matched_pct = book ? 100.0 * static_cast<double>(matched) / static_cast<double>(book) : 0.0;
    fee_pct = settled_worth ? 100.0 * static_cast<double>(fees) / static_cast<double>(settled_worth) : 0.0;
  }

  /// Everything except wall-clock durations, which vary run to run.
  nlohmann::ordered_json deterministic_json() const {
    auto opt = [](const std::optional<double>& v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["round"] = round;
    j["submitted"] = submitted;
    j["book"] = book;
    j["matched"] = matched;
    j["matched_pct"] = matched_pct;
    j["fees"] = fees;
    j["settled_worth"] = settled_worth;
    j["fee_pct"] = fee_pct;
    j["expired"] = expired;
    j["aborted"] = aborted;
    j["flagged_brokers"] = flagged_brokers;
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& p : matches) pairs.push_back({p.buy, p.sell});
    j["matches"] = std::move(pairs);
    j["topk"] = topk;
    j["true_mean"] = true_mean;
    j["true_sigma"] = true_sigma;
    j["gain_trader"] = opt(gain_trader);
    j["gain_broker"] = opt(gain_broker);
    return j;
  }

  nlohmann::ordered_json to_json() const {
    auto j = deterministic_json();
    j["seconds"] = {{"wait", seconds.wait},
                    {"sort", seconds.sort},
                    {"match", seconds.match},
                    {"settle", seconds.settle},
                    {"shuffle", seconds.shuffle}};
    return j;
  }
};

}  // namespace rialto::sim
