#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlab/dynamics.hpp"
#include "mlab/market.hpp"

namespace mlab {

struct EmmMeasure {
  std::vector<double> weights;  // q^w
  bool normalized = true;

  /// Positivity always; unit sum within 1e-12 when normalized.
  void validate() const;
};

/// Omega i.i.d. unit-mean exponentials, divided by their sum unless
/// `normalize` is false.
EmmMeasure sample_emm(std::size_t omega_count, std::uint64_t seed, bool normalize = true);

/// c_i = sum_w q^w a_i^w (1 + r^w).
std::vector<double> price_with_emm(const MarketInstance& market, const EmmMeasure& q, std::span<const double> r);

struct PricingResult {
  DynamicsTrace trace;
  /// The running state-conditional means r bar^w(T) the scores were driven by.
  std::vector<double> running_mean_returns;
};

/// Learning dynamics driven by u_i - bar_u with u_i = sum_w (q^w - pi^w)
/// a_i^w (1 + rbar^w(t)), where rbar^w(t) is the running mean of past returns
/// in state w, starting from the demand mean d bar.
PricingResult run_pricing_dynamics(const MarketInstance& market, const EmmMeasure& q, double bar_u,
                                   const DynamicsConfig& config, double demand_mean = 0.0);

struct EffectivePremiumStats {
  std::vector<double> premia;
  double mean = 0.0;
  double variance = 0.0;  // population variance over instruments
  double complexity = 0.0;
};

/// eps_i = omega (bar_u - sum_w (q^w - pi^w) a_i^w - sum_w q^w a_i^w rbar^w).
EffectivePremiumStats effective_epsilons(const MarketInstance& market, const EmmMeasure& q, double bar_u,
                                         std::span<const double> state_mean_returns);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

/// Least squares of log(value) on log(n). Needs >= 3 points, all positive.
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points);

/// 64 equal bins spanning mean +- 5 sample standard deviations.
nlohmann::json premium_histogram(const EffectivePremiumStats& stats);

}  // namespace mlab
