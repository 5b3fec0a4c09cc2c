#include "mlab/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mlab {

void EmmMeasure::validate() const {
  if (weights.empty()) throw ValidationError("EMM has no states");
  for (double q : weights) {
    if (!(q > 0.0) || !std::isfinite(q)) throw ValidationError("EMM weights must be positive and finite");
  }
  if (normalized) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("EMM weights must sum to 1");
  }
}

EmmMeasure sample_emm(std::size_t omega_count, std::uint64_t seed, bool normalize) {
  if (omega_count == 0) throw ValidationError("omega_count must be >= 1");
  Rng rng = make_rng(seed, Stream::Emm);
  std::exponential_distribution<double> expo(1.0);
  EmmMeasure q;
  q.normalized = normalize;
  q.weights.resize(omega_count);
  for (double& w : q.weights) {
    do {
      w = expo(rng);
    } while (!(w > 0.0));
  }
  if (normalize) {
    const double total = std::accumulate(q.weights.begin(), q.weights.end(), 0.0);
    for (double& w : q.weights) w /= total;
  }
  return q;
}

namespace {

void check_measure(const MarketInstance& market, const EmmMeasure& q) {
  q.validate();
  if (q.weights.size() != market.omega_count()) throw ValidationError("EMM size does not match omega");
}

}  // namespace

std::vector<double> price_with_emm(const MarketInstance& market, const EmmMeasure& q, std::span<const double> r) {
  check_measure(market, q);
  if (r.size() != market.omega_count()) throw ValidationError("return vector size does not match omega");
  std::vector<double> c(market.instrument_count(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto a = market.instrument_payoffs(i);
    double acc = 0.0;
    for (std::size_t w = 0; w < a.size(); ++w) acc += q.weights[w] * a[w] * (1.0 + r[w]);
    c[i] = acc;
  }
  return c;
}

PricingResult run_pricing_dynamics(const MarketInstance& market, const EmmMeasure& q, double bar_u,
                                   const DynamicsConfig& config, double demand_mean) {
  check_measure(market, q);
  const std::size_t n = market.instrument_count();
  const std::size_t omega = market.omega_count();
  config.validate(n);
  const auto pi = market.probabilities();
  const double s0 = market.max_supply();

  // tilt[w][i] = (q^w - pi^w) a_i^w, stored by state for the O(N) update.
  std::vector<double> tilt(omega * n);
  std::vector<double> u(n, 0.0);
  std::vector<double> rbar(omega, demand_mean);
  for (std::size_t w = 0; w < omega; ++w) {
    const auto a = market.state_payoffs(w);
    const double dq = q.weights[w] - pi[w];
    for (std::size_t i = 0; i < n; ++i) {
      tilt[w * n + i] = dq * a[i];
      u[i] += dq * a[i] * (1.0 + rbar[w]);
    }
  }

  std::vector<double> scores = config.initial_scores.empty() ? std::vector<double>(n, 0.0) : config.initial_scores;
  std::vector<std::size_t> seen(omega, 0);
  std::vector<unsigned char> supplied(n);
  StateSampler sampler(pi, config.seed);
  TraceAccumulator acc(pi, n, config.record_series);

  for (std::size_t t = 0; t < config.horizon; ++t) {
    const std::size_t w = sampler();
    const auto a = market.state_payoffs(w);
    double hedge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      supplied[i] = scores[i] > 0.0;
      if (supplied[i]) hedge += a[i];
    }
    const double r = market.demand()[w] + s0 * hedge;

    const double old = rbar[w];
    rbar[w] += (r - old) / static_cast<double>(++seen[w]);
    const double shift = rbar[w] - old;
    const double* tw = tilt.data() + w * n;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += tw[i] * shift;
      scores[i] += u[i] - bar_u;
    }
    if (t >= config.burn_in) acc.record(t, w, r, supplied);
  }

  PricingResult out;
  out.trace = acc.finish(scores);
  out.running_mean_returns = std::move(rbar);
  return out;
}

EffectivePremiumStats effective_epsilons(const MarketInstance& market, const EmmMeasure& q, double bar_u,
                                         std::span<const double> state_mean_returns) {
  check_measure(market, q);
  if (state_mean_returns.size() != market.omega_count()) throw ValidationError("mean return size does not match omega");
  const auto pi = market.probabilities();
  const double omega = static_cast<double>(market.omega_count());
  EffectivePremiumStats out;
  out.complexity = static_cast<double>(market.instrument_count()) / omega;
  out.premia.resize(market.instrument_count());
  for (std::size_t i = 0; i < out.premia.size(); ++i) {
    const auto a = market.instrument_payoffs(i);
    double tilt = 0.0, priced = 0.0;
    for (std::size_t w = 0; w < a.size(); ++w) {
      tilt += (q.weights[w] - pi[w]) * a[w];
      priced += q.weights[w] * a[w] * state_mean_returns[w];
    }
    out.premia[i] = omega * (bar_u - tilt - priced);
  }
  if (!out.premia.empty()) {
    const double k = static_cast<double>(out.premia.size());
    out.mean = std::accumulate(out.premia.begin(), out.premia.end(), 0.0) / k;
    double ss = 0.0;
    for (double e : out.premia) ss += (e - out.mean) * (e - out.mean);
    out.variance = ss / k;
  }
  return out;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("scaling_fit: need at least 3 points");
  std::vector<double> x, y;
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !(v > 0.0)) throw std::invalid_argument("scaling_fit: values must be positive");
    x.push_back(std::log(n));
    y.push_back(std::log(v));
  }
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sxx += (x[j] - mx) * (x[j] - mx);
    sxy += (x[j] - mx) * (y[j] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("scaling_fit: n values must not all coincide");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double e = y[j] - fit.intercept - fit.slope * x[j];
    ssr += e * e;
  }
  fit.stderr_slope = std::sqrt(ssr / (k - 2.0) / sxx);
  return fit;
}

nlohmann::json premium_histogram(const EffectivePremiumStats& stats) {
  constexpr int kBins = 64;
  const double k = static_cast<double>(stats.premia.size());
  const double sd = k > 1 ? std::sqrt(stats.variance * k / (k - 1.0)) : 0.0;
  const double lo = stats.mean - 5.0 * sd;
  const double hi = stats.mean + 5.0 * sd;
  std::vector<std::size_t> counts(kBins, 0);
  std::size_t below = 0, above = 0;
  for (double e : stats.premia) {
    if (!(hi > lo)) {
      ++counts[kBins / 2];
    } else if (e < lo) {
      ++below;
    } else if (e >= hi) {
      ++above;
    } else {
      const int b = std::min(kBins - 1, static_cast<int>((e - lo) / (hi - lo) * kBins));
      ++counts[b];
    }
  }
  return nlohmann::json{{"bins", kBins},   {"lo", lo},       {"hi", hi},
                        {"mean", stats.mean}, {"sd", sd},     {"counts", counts},
                        {"below", below},  {"above", above}, {"complexity", stats.complexity}};
}

}  // namespace mlab
