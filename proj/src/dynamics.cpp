#include "mlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mlab {

DynamicsConfig DynamicsConfig::defaults_for(const MarketInstance& market, std::uint64_t seed) {
  DynamicsConfig config;
  const std::size_t omega = market.omega_count();
  config.burn_in = 100 * omega;
  config.horizon = config.burn_in + 900 * omega;
  config.seed = seed;
  return config;
}

DynamicsConfig DynamicsConfig::stationary_for(const MarketInstance& market, std::uint64_t seed) {
  DynamicsConfig config = defaults_for(market, seed);
  const std::size_t omega = market.omega_count();
  // Scores drift by eps/omega per period, so transients last ~ omega/eps.
  const auto premia = market.premia();
  double mean_abs = 0.0;
  for (double e : premia) mean_abs += std::abs(e);
  if (!premia.empty()) mean_abs /= static_cast<double>(premia.size());
  const double periods = mean_abs > 0.0 ? std::ceil(10.0 / mean_abs) : 10000.0;
  config.burn_in = omega * static_cast<std::size_t>(std::clamp(periods, 100.0, 10000.0));
  config.horizon = config.burn_in + 900 * omega;
  return config;
}

void DynamicsConfig::validate(std::size_t instrument_count) const {
  if (horizon <= burn_in) throw ValidationError("dynamics.horizon must exceed dynamics.burn_in");
  if (!initial_scores.empty() && initial_scores.size() != instrument_count) {
    throw ValidationError("dynamics initial scores must have one entry per instrument");
  }
}

StateSampler::StateSampler(std::span<const double> probabilities, std::uint64_t seed)
    : rng_(make_rng(seed, Stream::States)),
      uniform_(std::adjacent_find(probabilities.begin(), probabilities.end(),
                                  [](double a, double b) { return std::abs(a - b) > 1e-15; }) ==
               probabilities.end()),
      uniform_dist_(0, probabilities.size() - 1),
      general_dist_(probabilities.begin(), probabilities.end()) {}

std::size_t StateSampler::operator()() { return uniform_ ? uniform_dist_(rng_) : general_dist_(rng_); }

LearningDynamics::LearningDynamics(const MarketInstance& market, std::vector<double> initial_scores,
                                   std::uint64_t seed)
    : market_(market), scores_(std::move(initial_scores)), sampler_(market.probabilities(), seed) {
  if (scores_.empty()) scores_.assign(market.instrument_count(), 0.0);
  if (scores_.size() != market.instrument_count()) {
    throw ValidationError("initial scores must have one entry per instrument");
  }
  drift_.resize(market.instrument_count());
  const double omega = static_cast<double>(market.omega_count());
  for (std::size_t i = 0; i < drift_.size(); ++i) drift_[i] = market.premia()[i] / omega;
}

LearningDynamics::Period LearningDynamics::step(std::vector<unsigned char>* supplied) {
  Period p;
  p.state = sampler_();
  const auto a = market_.state_payoffs(p.state);
  const double s0 = market_.max_supply();
  const std::size_t n = scores_.size();
  if (supplied) supplied->resize(n);

  double hedge = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool on = scores_[i] > 0.0;
    if (supplied) (*supplied)[i] = on;
    if (on) hedge += a[i];
  }
  p.ret = market_.demand()[p.state] + s0 * hedge;
  for (std::size_t i = 0; i < n; ++i) scores_[i] -= a[i] * p.ret + drift_[i];
  return p;
}

double DynamicsTrace::mean_supply_frequency() const {
  if (supply_frequency.empty()) return std::nan("");
  return std::accumulate(supply_frequency.begin(), supply_frequency.end(), 0.0) /
         static_cast<double>(supply_frequency.size());
}

TraceAccumulator::TraceAccumulator(std::span<const double> probabilities, std::size_t instrument_count,
                                   bool record_series)
    : pi_(probabilities.begin(), probabilities.end()),
      supply_count_(instrument_count, 0.0),
      visits_(probabilities.size(), 0),
      mean_(probabilities.size(), 0.0),
      m2_(probabilities.size(), 0.0),
      record_series_(record_series) {}

void TraceAccumulator::record(std::uint64_t t, std::size_t state, double ret,
                              const std::vector<unsigned char>& supplied) {
  for (std::size_t i = 0; i < supplied.size(); ++i) supply_count_[i] += supplied[i];
  // Welford updates, per state and pooled.
  const double k = static_cast<double>(++visits_[state]);
  const double d = ret - mean_[state];
  mean_[state] += d / k;
  m2_[state] += d * (ret - mean_[state]);
  const double kt = static_cast<double>(++count_);
  const double dt = ret - total_mean_;
  total_mean_ += dt / kt;
  total_m2_ += dt * (ret - total_mean_);
  if (record_series_) {
    series_t_.push_back(t);
    series_state_.push_back(static_cast<std::uint32_t>(state));
    series_return_.push_back(ret);
  }
}

DynamicsTrace TraceAccumulator::finish(std::span<const double> final_scores) const {
  if (count_ == 0) throw ValidationError("empty measurement window");
  DynamicsTrace trace;
  trace.state_probability = pi_;
  trace.window = count_;
  trace.supply_frequency.resize(supply_count_.size());
  for (std::size_t i = 0; i < supply_count_.size(); ++i) {
    trace.supply_frequency[i] = supply_count_[i] / static_cast<double>(count_);
  }
  trace.state_mean_return = mean_;
  trace.state_visit_count = visits_;
  trace.state_return_variance.resize(pi_.size());
  for (std::size_t w = 0; w < pi_.size(); ++w) {
    trace.state_return_variance[w] = visits_[w] >= 2 ? m2_[w] / static_cast<double>(visits_[w] - 1) : 0.0;
  }
  const auto parts = volatility_decomposition(trace);
  trace.static_volatility = parts.sigma;
  trace.dynamic_volatility = parts.v;
  trace.undersampled_states = parts.undersampled_states;
  trace.total_volatility = count_ >= 2 ? total_m2_ / static_cast<double>(count_ - 1) : 0.0;

  // The identity total = Sigma + V is broken only by visit frequencies
  // differing from pi, which are multinomial: Var = Var_pi(X) / window.
  const double pooled_mean = expectation(pi_, mean_);
  double ex = 0.0, ex2 = 0.0;
  for (std::size_t w = 0; w < pi_.size(); ++w) {
    const double dev = mean_[w] - pooled_mean;
    const double x = trace.state_return_variance[w] + dev * dev;
    ex += pi_[w] * x;
    ex2 += pi_[w] * x * x;
  }
  trace.decomposition_stderr = std::sqrt(std::max(0.0, ex2 - ex * ex) / static_cast<double>(count_));
  trace.final_scores.assign(final_scores.begin(), final_scores.end());
  trace.series_t = series_t_;
  trace.series_state = series_state_;
  trace.series_return = series_return_;
  return trace;
}

DynamicsTrace run_dynamics(const MarketInstance& market, const DynamicsConfig& config) {
  config.validate(market.instrument_count());
  LearningDynamics dyn(market, config.initial_scores, config.seed);
  TraceAccumulator acc(market.probabilities(), market.instrument_count(), config.record_series);
  std::vector<unsigned char> supplied;
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const auto p = dyn.step(&supplied);
    if (t >= config.burn_in) acc.record(t, p.state, p.ret, supplied);
  }
  return acc.finish(dyn.scores());
}

VolatilityDecomposition volatility_decomposition(const DynamicsTrace& trace) {
  const auto& pi = trace.state_probability;
  if (pi.size() != trace.state_mean_return.size() || pi.size() != trace.state_visit_count.size()) {
    throw ValidationError("trace is inconsistent");
  }
  const std::size_t total =
      std::accumulate(trace.state_visit_count.begin(), trace.state_visit_count.end(), std::size_t{0});
  if (total == 0) throw ValidationError("empty measurement window");
  VolatilityDecomposition out;
  double mean = 0.0, second = 0.0, v = 0.0;
  for (std::size_t w = 0; w < pi.size(); ++w) {
    const double rbar = trace.state_mean_return[w];
    mean += pi[w] * rbar;
    second += pi[w] * rbar * rbar;
    v += pi[w] * trace.state_return_variance[w];
    if (trace.state_visit_count[w] < 2) ++out.undersampled_states;
  }
  out.sigma = std::max(0.0, second - mean * mean);
  out.v = v;
  return out;
}

double independent_approx_V(std::span<const double> mean_supplies, std::size_t omega_count, double s0) {
  double acc = 0.0;
  for (double s : mean_supplies) acc += s * (s0 - s);
  return acc / static_cast<double>(omega_count);
}

double independent_approx_V(const MarketInstance& market, std::span<const double> mean_supplies) {
  if (mean_supplies.size() != market.instrument_count()) throw ValidationError("supply count mismatch");
  const double s0 = market.max_supply();
  double acc = 0.0;
  for (std::size_t i = 0; i < mean_supplies.size(); ++i) {
    acc += market.curvature(i) * mean_supplies[i] * (s0 - mean_supplies[i]);
  }
  return acc;
}

double independent_approx_V_representative(double complexity, double s0, double m0, double m2) {
  return complexity * (s0 * m0 - m2);
}

double resampled_independent_V(const MarketInstance& market, std::span<const double> frequencies,
                               std::size_t draws, std::uint64_t seed) {
  if (frequencies.size() != market.instrument_count()) throw ValidationError("frequency count mismatch");
  if (draws < 2) throw ValidationError("resampling needs at least two draws");
  Rng rng = make_rng(seed, Stream::Resample);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t omega = market.omega_count();
  const double s0 = market.max_supply();
  std::vector<double> mean(omega, 0.0), m2(omega, 0.0);
  std::vector<double> r(omega);
  for (std::size_t k = 1; k <= draws; ++k) {
    std::copy(market.demand().begin(), market.demand().end(), r.begin());
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
      if (unif(rng) >= frequencies[i]) continue;
      const auto a = market.instrument_payoffs(i);
      for (std::size_t w = 0; w < omega; ++w) r[w] += s0 * a[w];
    }
    for (std::size_t w = 0; w < omega; ++w) {
      const double d = r[w] - mean[w];
      mean[w] += d / static_cast<double>(k);
      m2[w] += d * (r[w] - mean[w]);
    }
  }
  double v = 0.0;
  const auto pi = market.probabilities();
  for (std::size_t w = 0; w < omega; ++w) v += pi[w] * m2[w] / static_cast<double>(draws - 1);
  return v;
}

void write_series_binary(const DynamicsTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const std::uint64_t count = trace.series_t.size();
  out.write("MLTS", 4);
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(trace.series_t.data()), static_cast<std::streamsize>(count * 8));
  out.write(reinterpret_cast<const char*>(trace.series_state.data()), static_cast<std::streamsize>(count * 4));
  out.write(reinterpret_cast<const char*>(trace.series_return.data()), static_cast<std::streamsize>(count * 8));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mlab
