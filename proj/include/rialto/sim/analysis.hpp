#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rialto/privacy.hpp"

namespace rialto::sim {

namespace detail {
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}
}  // namespace detail

/// Recomputes the broker-view gain of every round from the published logs
/// next to `report_path` alone, without the simulator's private state.
inline nlohmann::ordered_json analyze_privacy(const std::filesystem::path& report_path,
                                              VarianceScaling scaling = VarianceScaling::bessel) {
  std::ifstream in(report_path);
  if (!in) throw ParameterError("cannot open " + report_path.string());
  const auto report = nlohmann::json::parse(in);
  const auto dir = report_path.parent_path();
  const std::string protocol = report.at("config").at("protocol");

  std::map<std::uint64_t, GaussianParams> truth;
  for (const auto& r : report.at("rounds"))
    if (r.at("true_sigma").get<double>() > 0)
      truth[r.at("round").get<std::uint64_t>()] = {r.at("true_mean").get<double>(), r.at("true_sigma").get<double>()};

  std::map<std::uint64_t, LeakageView> views;
  std::map<std::uint64_t, std::vector<HistogramBin>> histograms;
  if (protocol == "rialto" || protocol == "rialto-plus") {
    for (const auto& e : detail::read_jsonl(dir / "leakage.jsonl")) {
      if (e.at("tag") != "topK-rates") continue;
      auto& v = views[e.at("round").get<std::uint64_t>()];
      v.order_count = e.at("payload").at("orders").get<std::size_t>();
      for (const auto& x : e.at("payload").at("rates")) v.top_rates.push_back(x.get<double>());
    }
  } else if (protocol == "bucketization") {
    std::map<std::uint64_t, BucketGrid> grids;
    std::map<std::uint64_t, std::vector<double>> topk;
    for (const auto& r : report.at("rounds"))
      for (const auto& x : r.at("topk")) topk[r.at("round").get<std::uint64_t>()].push_back(x.get<double>());
    for (const auto& line : detail::read_jsonl(dir / "ledger.jsonl")) {
      const auto& e = line.at("event");
      if (e.at("type") == "buckets_chosen")
        grids[e.at("round").get<std::uint64_t>()] = {e.at("width").get<std::int64_t>(), e.at("offset").get<std::int64_t>()};
      if (e.at("type") == "bucket_histogram") {
        const auto round = e.at("round").get<std::uint64_t>();
        std::map<std::int64_t, std::size_t> counts;
        std::size_t n = 0;
        for (const auto& c : e.at("counts")) {
          counts[c.at(0).get<std::int64_t>()] = c.at(1).get<std::size_t>();
          n += c.at(1).get<std::size_t>();
        }
        histograms[round] = histogram_bins(grids.at(round), counts);
        views[round] = {topk[round], n, std::nullopt};
      }
    }
  }

  nlohmann::ordered_json out;
  out["protocol"] = protocol;
  auto rounds = nlohmann::ordered_json::array();
  for (const auto& [round, view] : views) {
    nlohmann::ordered_json j;
    j["round"] = round;
    j["orders"] = view.order_count;
    j["top_k"] = view.top_rates.size();
    j["gain_broker"] = nullptr;
    if (truth.count(round)) {
      try {
        GaussianParams est;
        if (histograms.count(round)) {
          Rng rng = Rng(report.at("config").at("seed").get<std::uint64_t>()).fork("bucket-estimate", round);
          est = bucketization_estimate(histograms.at(round), view, rng, scaling);
        } else {
          est = estimate_params(view);
        }
        j["estimate"] = {{"mean", est.mean}, {"sigma", est.sigma}};
        j["gain_broker"] = privacy_gain(est, truth.at(round));
      } catch (const InsufficientData& e) {
        j["note"] = e.what();
      }
    }
    rounds.push_back(std::move(j));
  }
  out["rounds"] = std::move(rounds);
  return out;
}

}  // namespace rialto::sim
