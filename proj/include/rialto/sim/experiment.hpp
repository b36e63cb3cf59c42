#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rialto/group/ristretto255.hpp"
#include "rialto/group/schnorr_group.hpp"
#include "rialto/sim/runners.hpp"

namespace rialto::sim {

inline std::unique_ptr<ProtocolRunner> make_runner(const ExperimentConfig& c) {
  c.validate();
  if (is_plaintext(c.protocol)) return std::make_unique<PlainRunner>(c);
  const bool fast = c.group == GroupBackend::schnorr61;
  if (c.protocol == Protocol::bucketization) {
    if (fast) return std::make_unique<BucketRunner<group::Schnorr61>>(c);
    return std::make_unique<BucketRunner<group::Ristretto255>>(c);
  }
  if (fast) return std::make_unique<RialtoRunner<group::Schnorr61>>(c);
  return std::make_unique<RialtoRunner<group::Ristretto255>>(c);
}

struct ExperimentSummary {
  double matched_pct = 0;  // mean over rounds
  std::int64_t fees = 0;
  std::int64_t settled_worth = 0;
  double fee_pct = 0;
  std::optional<double> gain_trader;
  std::optional<double> gain_broker;
  std::size_t aborted_rounds = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RoundMetrics> rounds;
  ExperimentSummary summary;
  std::string ledger_jsonl;
  std::vector<nlohmann::ordered_json> leakage;
  std::vector<std::int64_t> conserved;  // per round, when observable

  nlohmann::ordered_json metadata() const {
    nlohmann::ordered_json j;
    j["variance_parameter"] = config.variance_is_stddev ? "standard deviation" : "variance";
    j["uniform_half_width"] = "round(sqrt(3*var))";
    j["spread_model"] = "both sides uniform on mean*(1 -/+ spread/2)";
    j["blom_ranks"] = "descending, rank 1 = highest rate";
    j["bucket_variance_scaling"] = config.bucket_variance == VarianceScaling::bessel ? "N/(N-1)" : "N";
    j["wait_seconds"] = "logical: half the round time";
    return j;
  }

  /// Report body without wall-clock fields.
  nlohmann::ordered_json deterministic_json() const {
    nlohmann::ordered_json j;
    j["config"] = config.to_json();
    j["metadata"] = metadata();
    auto rs = nlohmann::ordered_json::array();
    for (const auto& r : rounds) rs.push_back(r.deterministic_json());
    j["rounds"] = std::move(rs);
    j["summary"] = summary_json();
    return j;
  }

  nlohmann::ordered_json to_json() const {
    auto j = deterministic_json();
    auto rs = nlohmann::ordered_json::array();
    for (const auto& r : rounds) rs.push_back(r.to_json());
    j["rounds"] = std::move(rs);
    return j;
  }

  nlohmann::ordered_json summary_json() const {
    auto opt = [](const std::optional<double>& v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    return {{"matched_pct", summary.matched_pct}, {"fees", summary.fees},
            {"settled_worth", summary.settled_worth}, {"fee_pct", summary.fee_pct},
            {"gain_trader", opt(summary.gain_trader)}, {"gain_broker", opt(summary.gain_broker)},
            {"aborted_rounds", summary.aborted_rounds}};
  }

  std::string rounds_csv() const {
    std::string out =
        "round,submitted,book,matched,matched_pct,fees,settled_worth,fee_pct,expired,aborted,gain_trader,gain_broker,"
        "wait_s,sort_s,match_s,settle_s,shuffle_s\n";
    auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : rounds) {
      out += std::to_string(r.round) + "," + std::to_string(r.submitted) + "," + std::to_string(r.book) + "," +
             std::to_string(r.matched) + "," + std::to_string(r.matched_pct) + "," + std::to_string(r.fees) + "," +
             std::to_string(r.settled_worth) + "," + std::to_string(r.fee_pct) + "," + std::to_string(r.expired) +
             "," + (r.aborted ? "1" : "0") + "," + opt(r.gain_trader) + "," + opt(r.gain_broker) + "," +
             std::to_string(r.seconds.wait) + "," + std::to_string(r.seconds.sort) + "," +
             std::to_string(r.seconds.match) + "," + std::to_string(r.seconds.settle) + "," +
             std::to_string(r.seconds.shuffle) + "\n";
    }
    return out;
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << to_json().dump(2) << "\n";
    std::ofstream(dir / "rounds.csv") << rounds_csv();
    std::ofstream(dir / "ledger.jsonl") << ledger_jsonl;
    std::ofstream leak(dir / "leakage.jsonl");
    for (const auto& e : leakage) leak << e.dump() << "\n";
  }
};

inline ExperimentSummary summarize(const std::vector<RoundMetrics>& rounds) {
  ExperimentSummary s;
  double pct = 0, gt = 0, gb = 0;
  std::size_t nt = 0, nb = 0, counted = 0;
  for (const auto& r : rounds) {
    if (r.aborted) ++s.aborted_rounds;
    if (r.book) pct += r.matched_pct, ++counted;
    s.fees += r.fees;
    s.settled_worth += r.settled_worth;
    if (r.gain_trader) gt += *r.gain_trader, ++nt;
    if (r.gain_broker) gb += *r.gain_broker, ++nb;
  }
  s.matched_pct = counted ? pct / static_cast<double>(counted) : 0;
  s.fee_pct = s.settled_worth ? 100.0 * static_cast<double>(s.fees) / static_cast<double>(s.settled_worth) : 0;
  if (nt) s.gain_trader = gt / static_cast<double>(nt);
  if (nb) s.gain_broker = gb / static_cast<double>(nb);
  return s;
}

inline ExperimentReport run_experiment(const ExperimentConfig& c) {
  auto runner = make_runner(c);
  ExperimentReport rep;
  rep.config = c;
  for (std::uint64_t r = 0; r < c.rounds; ++r) {
    rep.rounds.push_back(runner->run_round(r, round_intents(c, r)));
    if (auto total = runner->conserved_total()) rep.conserved.push_back(*total);
  }
  rep.summary = summarize(rep.rounds);
  rep.ledger_jsonl = runner->chain().dump_jsonl();
  if (const auto* log = runner->leakage())
    for (const auto& e : log->entries()) rep.leakage.push_back(mpc::LeakageLog::to_json(e));
  return rep;
}

}  // namespace rialto::sim
