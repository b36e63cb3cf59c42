#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "rialto/bucketization.hpp"
#include "rialto/errors.hpp"
#include "rialto/rng.hpp"

namespace rialto {

struct GaussianParams {
  double mean = 0;
  double sigma = 1;
};

/// Standard normal quantile, Wichura's AS241 (PPND16), relative error ~1e-16.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal_quantile: probability must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
             1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
             0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
             0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
             7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -x : x;
}

inline constexpr double kBlomAlpha = std::numbers::pi / 8.0;

/// Plotting position of rank r (1 = largest) among n.
inline double blom_position(std::size_t rank, std::size_t n) {
  if (rank < 1 || rank > n) throw ParameterError("blom: rank must lie in [1, n]");
  return (static_cast<double>(rank) - kBlomAlpha) / (static_cast<double>(n) - 2.0 * kBlomAlpha + 2.0);
}

inline double blom_expectation(std::size_t rank, std::size_t n, const GaussianParams& params) {
  return params.mean - normal_quantile(blom_position(rank, n)) * params.sigma;
}

struct RankedRate {
  std::size_t rank = 0;  // 1 = highest
  double rate = 0;
};

/// What an adversary sees after a round.
struct LeakageView {
  std::vector<double> top_rates;  // descending, ranks 1..K
  std::size_t order_count = 0;
  std::optional<RankedRate> own;  // trader view only
};

inline constexpr double kSigmaFloor = 1e-6;

/// Least-squares fit of x_r = mu - quantile(pos(r)) * sigma.
inline GaussianParams estimate_params(const LeakageView& view) {
  if (view.top_rates.size() > view.order_count) throw ParameterError("estimate_params: K exceeds N");
  std::vector<std::pair<double, double>> points;  // (z, x)
  for (std::size_t i = 0; i < view.top_rates.size(); ++i)
    points.emplace_back(-normal_quantile(blom_position(i + 1, view.order_count)), view.top_rates[i]);
  if (view.own && view.own->rank > view.top_rates.size())
    points.emplace_back(-normal_quantile(blom_position(view.own->rank, view.order_count)), view.own->rate);
  if (points.size() < 2) throw InsufficientData("estimate_params: need at least two ranked rates");

  double zbar = 0, xbar = 0;
  for (auto [z, x] : points) zbar += z, xbar += x;
  zbar /= static_cast<double>(points.size());
  xbar /= static_cast<double>(points.size());
  double szz = 0, szx = 0;
  for (auto [z, x] : points) szz += (z - zbar) * (z - zbar), szx += (z - zbar) * (x - xbar);
  const double sigma = std::max(szx / szz, kSigmaFloor);
  return {xbar - sigma * zbar, sigma};
}

/// KL(est || truth) for two univariate Gaussians, in nats.
inline double kl_divergence(const GaussianParams& est, const GaussianParams& truth) {
  if (est.sigma <= 0 || truth.sigma <= 0) throw ParameterError("kl_divergence: sigma must be positive");
  const double d = est.mean - truth.mean;
  return std::log(truth.sigma / est.sigma) + (est.sigma * est.sigma + d * d) / (2.0 * truth.sigma * truth.sigma) - 0.5;
}

inline double differential_entropy(const GaussianParams& p) {
  if (p.sigma <= 0) throw ParameterError("differential_entropy: sigma must be positive");
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * p.sigma * p.sigma);
}

/// KL of the estimate from the truth as a percentage of the truth's entropy.
inline double privacy_gain(const GaussianParams& est, const GaussianParams& truth) {
  const double h = differential_entropy(truth);
  if (h <= 0) throw UndefinedGain("privacy_gain: entropy of the true distribution is not positive");
  return 100.0 * kl_divergence(est, truth) / h;
}

struct HistogramBin {
  double lower = 0;  // inclusive
  double upper = 0;  // exclusive; equal to lower for a point mass
  std::size_t count = 0;
};

inline std::vector<HistogramBin> histogram_bins(const BucketGrid& grid, const std::map<std::int64_t, std::size_t>& counts) {
  std::vector<HistogramBin> bins;
  for (auto [index, n] : counts)
    bins.push_back({static_cast<double>(grid.floor_of(index)), static_cast<double>(grid.ceiling_of(index)), n});
  return bins;
}

enum class VarianceScaling {
  bessel,     // N/(N-1): unbiased population variance from the sample
  literal_n,  // multiply by N
};

/// Imputes every hidden rate uniformly inside its bucket, keeps exactly
/// known rates, and reads the Gaussian off the synthetic sample.
inline GaussianParams bucketization_estimate(std::vector<HistogramBin> bins, const LeakageView& view, Rng& rng,
                                             VarianceScaling scaling = VarianceScaling::bessel) {
  std::vector<double> sample;
  auto take_known = [&](double rate) {
    sample.push_back(rate);
    for (auto& b : bins) {
      const bool inside = b.upper > b.lower ? (rate >= b.lower && rate < b.upper) : rate == b.lower;
      if (inside && b.count > 0) {
        --b.count;
        return;
      }
    }
  };
  for (double r : view.top_rates) take_known(r);
  if (view.own && view.own->rank > view.top_rates.size()) take_known(view.own->rate);
  for (const auto& b : bins)
    for (std::size_t i = 0; i < b.count; ++i) sample.push_back(b.lower + (b.upper - b.lower) * rng.uniform01());
  if (sample.empty()) throw InsufficientData("bucketization_estimate: empty histogram");

  const double n = static_cast<double>(sample.size());
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double ss = 0;
  for (double x : sample) ss += (x - mean) * (x - mean);
  double var = ss / n;
  if (scaling == VarianceScaling::literal_n)
    var *= n;
  else if (sample.size() > 1)
    var *= n / (n - 1.0);
  return {mean, std::max(std::sqrt(var), kSigmaFloor)};
}

/// Synthetic leakage study: N rates from `truth`, adversary sees the top K
/// (and, as a trader, one uniformly chosen own order).
enum class Adversary { broker, trader };

struct PrivacyTrial {
  std::size_t orders = 512;
  std::size_t top_k = 16;
  GaussianParams truth{250.0, 15.0};
  Adversary adversary = Adversary::broker;
};

namespace detail {

inline std::vector<double> draw_sorted_desc(const PrivacyTrial& t, Rng& rng) {
  std::normal_distribution<double> dist(t.truth.mean, t.truth.sigma);
  std::vector<double> rates(t.orders);
  for (auto& r : rates) r = dist(rng);
  std::sort(rates.begin(), rates.end(), std::greater<>());
  return rates;
}

inline LeakageView view_of(const PrivacyTrial& t, const std::vector<double>& desc, Rng& rng) {
  if (t.top_k > t.orders) throw ParameterError("privacy trial: K exceeds N");
  LeakageView v;
  v.order_count = t.orders;
  v.top_rates.assign(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(t.top_k));
  if (t.adversary == Adversary::trader) {
    const auto i = static_cast<std::size_t>(rng.below(t.orders));
    v.own = RankedRate{i + 1, desc[i]};
  }
  return v;
}

}  // namespace detail

inline double rialto_gain_trial(const PrivacyTrial& t, Rng& rng) {
  const auto desc = detail::draw_sorted_desc(t, rng);
  return privacy_gain(estimate_params(detail::view_of(t, desc, rng)), t.truth);
}

inline double bucketization_gain_trial(const PrivacyTrial& t, std::int64_t width, Rng& rng,
                                       VarianceScaling scaling = VarianceScaling::bessel) {
  const auto desc = detail::draw_sorted_desc(t, rng);
  const auto view = detail::view_of(t, desc, rng);
  Digest256 seed{};
  rng.fill(seed);
  const BucketGrid grid = choose_buckets(width, seed);
  std::map<std::int64_t, std::size_t> counts;
  for (double r : desc) ++counts[grid.index_of(static_cast<std::int64_t>(std::floor(r)))];
  return privacy_gain(bucketization_estimate(histogram_bins(grid, counts), view, rng, scaling), t.truth);
}

}  // namespace rialto
