#include <CLI11.hpp>

#include <iostream>

#include "rialto/sim/analysis.hpp"
#include "rialto/sim/experiment.hpp"

int main(int argc, char** argv) {
  using namespace rialto::sim;
  CLI::App app{"rialto marketplace simulator"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string protocol = "rialto", distribution = "uniform", matching = "maximal-fair", settlement = "difference";
  std::string group = "ristretto255", transport = "in-process", out_dir = "out";
  double spread_pct = 4;
  bool no_spread = false;

  auto* sim = app.add_subcommand("simulate", "run an experiment and write its report");
  sim->add_option("--protocol", protocol)
      ->check(CLI::IsMember({"centralized", "zero-privacy", "semi-private", "offchain-matching", "bucketization",
                             "rialto", "rialto-plus"}));
  sim->add_option("--orders", cfg.orders_per_round, "mean orders per round");
  sim->add_option("--rounds", cfg.rounds);
  sim->add_option("--brokers", cfg.brokers);
  sim->add_option("--topk", cfg.top_k);
  sim->add_option("--bucket-width", cfg.bucket_width);
  sim->add_option("--distribution", distribution)->check(CLI::IsMember({"uniform", "normal"}));
  sim->add_option("--buyer-mean", cfg.buyer_mean);
  sim->add_option("--seller-mean", cfg.seller_mean);
  sim->add_option("--variance", cfg.variance);
  sim->add_flag("--variance-is-stddev", cfg.variance_is_stddev);
  sim->add_option("--spread", spread_pct, "quoted spread in percent");
  sim->add_flag("--no-spread", no_spread, "use the buyer and seller means as given");
  sim->add_option("--max-unmatched-rounds", cfg.max_unmatched_rounds);
  sim->add_option("--matching", matching)->check(CLI::IsMember({"maximal-fair", "price-time"}));
  sim->add_option("--settlement", settlement)->check(CLI::IsMember({"difference", "mean"}));
  sim->add_option("--seed", cfg.seed);
  sim->add_option("--traders", cfg.traders);
  sim->add_option("--group", group)->check(CLI::IsMember({"ristretto255", "schnorr61"}));
  sim->add_option("--transport", transport)->check(CLI::IsMember({"in-process", "socket"}));
  sim->add_flag("--test-mode", cfg.test_mode, "track openings and audit conservation");
  sim->add_option("--out", out_dir);

  std::string report_path;
  std::string scaling = "bessel";
  sim->add_option("--variance-scaling", scaling, "bucketization estimator")->check(CLI::IsMember({"bessel", "n"}));
  auto* analyze = app.add_subcommand("analyze-privacy", "recompute privacy gains from a report's logs");
  analyze->add_option("--report", report_path)->required();
  analyze->add_option("--variance-scaling", scaling)->check(CLI::IsMember({"bessel", "n"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      cfg.protocol = parse_protocol(protocol);
      cfg.distribution = distribution == "uniform" ? RateDistribution::uniform : RateDistribution::normal;
      cfg.matching = matching == "maximal-fair" ? MatchingRule::maximal_fair : MatchingRule::price_time;
      cfg.settlement = settlement == "difference" ? rialto::SettlementScheme::difference : rialto::SettlementScheme::mean;
      cfg.group = group == "schnorr61" ? GroupBackend::schnorr61 : GroupBackend::ristretto255;
      cfg.transport = transport == "socket" ? rialto::mpc::TransportKind::loopback_socket
                                            : rialto::mpc::TransportKind::in_process;
      cfg.bucket_variance = scaling == "n" ? rialto::VarianceScaling::literal_n : rialto::VarianceScaling::bessel;
      if (no_spread) cfg.spread.reset();
      else cfg.spread = spread_pct / 100.0;
      const auto report = run_experiment(cfg);
      report.write(out_dir);
      std::cout << report.summary_json().dump(2) << "\n";
    } else {
      const auto vs = scaling == "n" ? rialto::VarianceScaling::literal_n : rialto::VarianceScaling::bessel;
      std::cout << analyze_privacy(report_path, vs).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
