#include "mlab/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mlab/rng.hpp"

namespace mlab {

std::size_t MarketParams::instrument_count() const {
  return static_cast<std::size_t>(std::llround(complexity * static_cast<double>(omega_count)));
}

void MarketParams::validate() const {
  if (omega_count == 0) throw ValidationError("market.omega must be at least 1");
  if (!(complexity >= 0.0) || !std::isfinite(complexity)) {
    throw ValidationError("market.n must be a finite nonnegative number");
  }
  if (!(demand_variance >= 0.0)) throw ValidationError("market.delta must be nonnegative");
  if (!(premium_variance >= 0.0)) throw ValidationError("market.eps_var must be nonnegative");
  if (!(max_supply > 0.0)) throw ValidationError("market.s0 must be positive");
  if (!std::isfinite(demand_mean) || !std::isfinite(premium_mean)) {
    throw ValidationError("market means must be finite");
  }
}

MarketInstance::MarketInstance(std::vector<double> probabilities, std::vector<double> demand,
                               std::vector<double> payoffs_row_major, std::vector<double> premia,
                               double max_supply)
    : probabilities_(std::move(probabilities)),
      demand_(std::move(demand)),
      payoffs_(std::move(payoffs_row_major)),
      premia_(std::move(premia)),
      max_supply_(max_supply) {
  const std::size_t omega = probabilities_.size();
  const std::size_t n = premia_.size();
  if (omega == 0) throw ValidationError("market needs at least one state");
  if (demand_.size() != omega) throw ValidationError("demand length must equal omega");
  if (payoffs_.size() != n * omega) throw ValidationError("payoff matrix must be N x omega");
  if (!(max_supply_ > 0.0)) throw ValidationError("max supply must be positive");

  double total = 0.0;
  for (double p : probabilities_) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("state probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("state probabilities must sum to 1");
  auto all_finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!all_finite(demand_) || !all_finite(payoffs_) || !all_finite(premia_)) {
    throw ValidationError("market entries must be finite");
  }

  payoffs_by_state_.resize(payoffs_.size());
  curvature_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t w = 0; w < omega; ++w) {
      const double a = payoffs_[i * omega + w];
      payoffs_by_state_[w * n + i] = a;
      curvature_[i] += probabilities_[w] * a * a;
    }
  }
}

std::span<const double> MarketInstance::instrument_payoffs(std::size_t i) const {
  return std::span<const double>(payoffs_).subspan(i * omega_count(), omega_count());
}

std::span<const double> MarketInstance::state_payoffs(std::size_t w) const {
  return std::span<const double>(payoffs_by_state_).subspan(w * instrument_count(), instrument_count());
}

bool MarketInstance::in_box(const SupplyVector& s, double slack) const {
  if (s.size() != instrument_count()) return false;
  return std::all_of(s.values.begin(), s.values.end(),
                     [&](double x) { return x >= -slack && x <= max_supply_ + slack; });
}

void MarketInstance::check_supply_size(const SupplyVector& s) const {
  if (s.size() != instrument_count()) {
    throw ValidationError("supply vector has " + std::to_string(s.size()) + " entries, market has " +
                          std::to_string(instrument_count()) + " instruments");
  }
}

MarketInstance generate_market(const MarketParams& params) {
  params.validate();
  const std::size_t omega = params.omega_count;
  const std::size_t n = params.instrument_count();

  std::vector<double> pi(omega, 1.0 / static_cast<double>(omega));
  // 1/omega summed omega times is not exactly 1 for every omega.
  pi.back() = 1.0 - std::accumulate(pi.begin(), pi.end() - 1, 0.0);

  std::vector<double> demand(omega);
  {
    Rng rng = make_rng(params.seed, Stream::Demand);
    std::normal_distribution<double> dist(params.demand_mean, std::sqrt(params.demand_variance));
    for (double& d : demand) d = params.demand_variance > 0.0 ? dist(rng) : params.demand_mean;
  }

  std::vector<double> payoffs(n * omega);
  {
    Rng rng = make_rng(params.seed, Stream::Payoffs);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(omega)));
    for (double& a : payoffs) a = dist(rng);
  }

  std::vector<double> premia(n, params.premium_mean);
  if (params.premium_variance > 0.0) {
    Rng rng = make_rng(params.seed, Stream::Premia);
    std::normal_distribution<double> dist(params.premium_mean, std::sqrt(params.premium_variance));
    for (double& e : premia) e = dist(rng);
  }

  MarketInstance market(std::move(pi), std::move(demand), std::move(payoffs), std::move(premia),
                        params.max_supply);
  market.complexity = params.complexity;
  market.seed = params.seed;
  return market;
}

std::vector<double> compute_returns(const MarketInstance& market, const SupplyVector& s) {
  market.check_supply_size(s);
  std::vector<double> r(market.demand().begin(), market.demand().end());
  const std::size_t omega = market.omega_count();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double si = s[i];
    if (si == 0.0) continue;
    const auto a = market.instrument_payoffs(i);
    for (std::size_t w = 0; w < omega; ++w) r[w] += si * a[w];
  }
  return r;
}

double expectation(std::span<const double> weights, std::span<const double> values) {
  double acc = 0.0;
  for (std::size_t w = 0; w < weights.size(); ++w) acc += weights[w] * values[w];
  return acc;
}

double profit_gap(const MarketInstance& market, std::span<const double> returns, std::size_t i) {
  if (i >= market.instrument_count()) throw ValidationError("instrument index out of range");
  if (returns.size() != market.omega_count()) throw ValidationError("return vector must have omega entries");
  const auto a = market.instrument_payoffs(i);
  const auto pi = market.probabilities();
  double hedge = 0.0;
  for (std::size_t w = 0; w < a.size(); ++w) hedge += pi[w] * a[w] * returns[w];
  return -market.premia()[i] / static_cast<double>(market.omega_count()) - hedge;
}

nlohmann::json market_to_json(const MarketInstance& market) {
  nlohmann::json doc;
  doc["omega"] = market.omega_count();
  doc["n"] = market.complexity;
  doc["pi"] = std::vector<double>(market.probabilities().begin(), market.probabilities().end());
  doc["d0"] = std::vector<double>(market.demand().begin(), market.demand().end());
  doc["payoffs"] = std::vector<double>(market.payoffs().begin(), market.payoffs().end());
  doc["premia"] = std::vector<double>(market.premia().begin(), market.premia().end());
  if (std::isfinite(market.max_supply())) {
    doc["s0"] = market.max_supply();
  } else {
    doc["s0"] = nullptr;
  }
  doc["seed"] = market.seed;
  return doc;
}

MarketInstance market_from_json(const nlohmann::json& doc) {
  const double s0 = doc.at("s0").is_null() ? std::numeric_limits<double>::infinity()
                                           : doc.at("s0").get<double>();
  MarketInstance market(doc.at("pi").get<std::vector<double>>(), doc.at("d0").get<std::vector<double>>(),
                        doc.at("payoffs").get<std::vector<double>>(),
                        doc.at("premia").get<std::vector<double>>(), s0);
  if (doc.at("omega").get<std::size_t>() != market.omega_count()) {
    throw ValidationError("market json: omega does not match pi length");
  }
  market.complexity = doc.value("n", 0.0);
  market.seed = doc.value("seed", std::uint64_t{0});
  return market;
}

}  // namespace mlab
