#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mlab/market.hpp"
#include "mlab/rng.hpp"

namespace mlab {

struct DynamicsConfig {
  std::size_t horizon = 0;  // total periods T
  std::size_t burn_in = 0;  // discarded leading periods, < horizon
  std::vector<double> initial_scores;  // empty means all zero
  std::uint64_t seed = 0;
  bool record_series = false;

  /// burn_in = 100 omega, measurement window = 900 omega.
  static DynamicsConfig defaults_for(const MarketInstance& market, std::uint64_t seed = 0);
  /// Same window, burn_in = omega * clamp(10 / mean|eps|, 100, 10^4) so the
  /// relaxation from U = 0 (time ~ omega/eps) is discarded.
  static DynamicsConfig stationary_for(const MarketInstance& market, std::uint64_t seed = 0);
  void validate(std::size_t instrument_count) const;
};

/// Draws omega(t) i.i.d. from pi.
class StateSampler {
 public:
  StateSampler(std::span<const double> probabilities, std::uint64_t seed);
  std::size_t operator()();

 private:
  Rng rng_;
  bool uniform_;
  std::uniform_int_distribution<std::size_t> uniform_dist_;
  std::discrete_distribution<std::size_t> general_dist_;
};

/// The score recursion U_i(t+1) = U_i(t) - a_i^w r^w - eps_i/omega with
/// supply s_i(t) = s0 [U_i(t) > 0].
class LearningDynamics {
 public:
  LearningDynamics(const MarketInstance& market, std::vector<double> initial_scores, std::uint64_t seed);

  struct Period {
    std::size_t state = 0;
    double ret = 0.0;
  };

  /// Advances one period. If `supplied` is non-null it receives the
  /// per-instrument supply indicator used in this period.
  Period step(std::vector<unsigned char>* supplied = nullptr);

  std::span<const double> scores() const { return scores_; }

 private:
  const MarketInstance& market_;
  std::vector<double> scores_;
  std::vector<double> drift_;  // eps_i / omega
  StateSampler sampler_;
};

struct DynamicsTrace {
  std::vector<double> state_probability;  // pi, for the decomposition
  std::vector<double> supply_frequency;
  std::vector<double> state_mean_return;
  std::vector<double> state_return_variance;  // unbiased, zero with < 2 visits
  std::vector<std::size_t> state_visit_count;
  double static_volatility = 0.0;
  double dynamic_volatility = 0.0;
  double total_volatility = 0.0;  // sample variance of r(t) over the window
  double decomposition_stderr = 0.0;
  std::size_t window = 0;
  std::size_t undersampled_states = 0;  // states visited fewer than twice
  std::vector<double> final_scores;

  // Filled only with record_series.
  std::vector<std::uint64_t> series_t;
  std::vector<std::uint32_t> series_state;
  std::vector<double> series_return;

  double mean_supply_frequency() const;
};

/// Accumulates window statistics of a learning run; shared with the
/// pricing dynamics.
class TraceAccumulator {
 public:
  TraceAccumulator(std::span<const double> probabilities, std::size_t instrument_count, bool record_series);
  void record(std::uint64_t t, std::size_t state, double ret, const std::vector<unsigned char>& supplied);
  DynamicsTrace finish(std::span<const double> final_scores) const;

 private:
  std::vector<double> pi_;
  std::vector<double> supply_count_;
  std::vector<std::size_t> visits_;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::size_t count_ = 0;
  double total_mean_ = 0.0;
  double total_m2_ = 0.0;
  bool record_series_;
  std::vector<std::uint64_t> series_t_;
  std::vector<std::uint32_t> series_state_;
  std::vector<double> series_return_;
};

DynamicsTrace run_dynamics(const MarketInstance& market, const DynamicsConfig& config);

struct VolatilityDecomposition {
  double sigma = 0.0;  // static part, variance of the state means under pi
  double v = 0.0;      // dynamic part, pi-average of the conditional variances
  std::size_t undersampled_states = 0;
};

VolatilityDecomposition volatility_decomposition(const DynamicsTrace& trace);

/// (1/omega) sum_i s_i (s0 - s_i): conditional return variance if each
/// s_i(t) in {0, s0} fluctuated independently with mean s_i.
double independent_approx_V(std::span<const double> mean_supplies, std::size_t omega_count, double s0);

/// Same approximation with the realized payoff weights sum_w pi^w (a_i^w)^2.
double independent_approx_V(const MarketInstance& market, std::span<const double> mean_supplies);

/// Representative-derivative form n E[s_z (s0 - s_z)] = n (s0 m0 - m2).
double independent_approx_V_representative(double complexity, double s0, double m0, double m2);

/// Monte Carlo check of the approximation: draws independent Bernoulli
/// supplies with the given frequencies and measures E_pi[Var(r | w)].
double resampled_independent_V(const MarketInstance& market, std::span<const double> frequencies,
                               std::size_t draws, std::uint64_t seed);

/// Columnar little-endian dump: "MLTS", u64 count, then t[], state[], r[].
void write_series_binary(const DynamicsTrace& trace, const std::string& path);

}  // namespace mlab
