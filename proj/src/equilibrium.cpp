#include "mlab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlab/rng.hpp"

namespace mlab {

namespace {

double half_mean_square(std::span<const double> pi, std::span<const double> r) {
  double acc = 0.0;
  for (std::size_t w = 0; w < r.size(); ++w) acc += pi[w] * r[w] * r[w];
  return 0.5 * acc;
}

double premium_term(const MarketInstance& market, const SupplyVector& s) {
  const double omega = static_cast<double>(market.omega_count());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += market.premia()[i] / omega * s[i];
  return acc;
}

double kkt_violation(double gap, double s, double s0) {
  if (s <= 0.0) return std::max(0.0, gap);
  if (s >= s0) return std::max(0.0, -gap);
  return std::abs(gap);
}

double residual_from_returns(const MarketInstance& market, const SupplyVector& s,
                             std::span<const double> r) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst = std::max(worst, kkt_violation(profit_gap(market, r, i), s[i], market.max_supply()));
  }
  return worst;
}

}  // namespace

const char* to_string(EquilibriumStatus status) {
  switch (status) {
    case EquilibriumStatus::Converged: return "converged";
    case EquilibriumStatus::Stalled: return "stalled";
    case EquilibriumStatus::NonConvergence: return "nonconvergence";
  }
  return "unknown";
}

double hamiltonian(const MarketInstance& market, const SupplyVector& s) {
  const auto r = compute_returns(market, s);
  return half_mean_square(market.probabilities(), r) + premium_term(market, s);
}

double verify_kkt(const MarketInstance& market, const SupplyVector& s) {
  const auto r = compute_returns(market, s);
  return residual_from_returns(market, s, r);
}

EquilibriumSolution solve_equilibrium(const MarketInstance& market, const EquilibriumOptions& options) {
  const std::size_t n = market.instrument_count();
  const std::size_t omega = market.omega_count();
  const double s0 = market.max_supply();
  const double tol = options.tol > 0.0 ? options.tol : 1e-10 / static_cast<double>(omega);
  const auto pi = market.probabilities();

  EquilibriumSolution sol;
  sol.supplies = SupplyVector::zeros(n);
  sol.returns.assign(market.demand().begin(), market.demand().end());
  auto& s = sol.supplies;
  auto& r = sol.returns;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng(derive_seed(options.order_seed, {0x0de7}));

  for (std::size_t i = 0; i < n; ++i) {
    if (market.curvature(i) == 0.0 && market.premia()[i] < 0.0) {
      if (!std::isfinite(s0)) throw ValidationError("unbounded descent along an inert instrument");
      sol.degenerate_coordinates.push_back(i);
    }
  }

  auto move_coordinate = [&](std::size_t i, double target) {
    const double delta = target - s[i];
    if (delta == 0.0) return;
    const auto a = market.instrument_payoffs(i);
    for (std::size_t w = 0; w < omega; ++w) r[w] += delta * a[w];
    s[i] = target;
  };

  // Flat coordinates carry no return impact; their optimum is set by the premium alone.
  for (std::size_t i = 0; i < n; ++i) {
    if (market.curvature(i) == 0.0 && market.premia()[i] < 0.0) s[i] = s0;
  }

  double h_prev = half_mean_square(pi, r) + premium_term(market, s);
  sol.kkt_residual = residual_from_returns(market, s, r);
  if (sol.kkt_residual <= tol) {
    sol.status = EquilibriumStatus::Converged;
    sol.hamiltonian_value = h_prev;
    return sol;
  }

  constexpr std::size_t kStallSweeps = 20;
  double best_kkt = sol.kkt_residual;
  std::size_t stagnant = 0;
  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    if (options.randomized_order) std::shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t i : order) {
      const double h = market.curvature(i);
      if (h == 0.0) continue;
      const double gap = profit_gap(market, r, i);
      const double target = std::clamp(s[i] + gap / h, 0.0, s0);
      move_coordinate(i, target);
    }
    // Incremental updates drift; refresh the return vector once per sweep.
    r = compute_returns(market, s);
    sol.sweeps = sweep;
    const double h_now = half_mean_square(pi, r) + premium_term(market, s);
    sol.kkt_residual = residual_from_returns(market, s, r);
    sol.hamiltonian_value = h_now;
    if (sol.kkt_residual <= tol) {
      sol.status = EquilibriumStatus::Converged;
      return sol;
    }
    // H changes by O(gap^2), so a flat H alone says little while the
    // residual still improves. Stall only when both have stopped moving.
    const double scale = std::max(1.0, std::abs(h_now));
    const bool flat = h_prev - h_now < tol * 1e-3 * scale;
    if (sol.kkt_residual < 0.99 * best_kkt) {
      best_kkt = sol.kkt_residual;
      stagnant = 0;
    } else if (flat && ++stagnant >= kStallSweeps) {
      sol.status = EquilibriumStatus::Stalled;
      return sol;
    }
    h_prev = h_now;
  }
  sol.status = EquilibriumStatus::NonConvergence;
  return sol;
}

EquilibriumObservables equilibrium_observables(const MarketInstance& market,
                                               const EquilibriumSolution& solution) {
  EquilibriumObservables obs;
  const auto pi = market.probabilities();
  const auto& r = solution.returns;
  if (r.size() != market.omega_count()) throw ValidationError("solution does not match market");
  obs.mean_return = expectation(pi, r);
  double second = 0.0;
  for (std::size_t w = 0; w < r.size(); ++w) second += pi[w] * (r[w] - obs.mean_return) * (r[w] - obs.mean_return);
  obs.volatility = second;

  const std::size_t n = solution.supplies.size();
  if (n == 0) return obs;
  const double s0 = market.max_supply();
  const double threshold = std::isfinite(s0) ? 1e-8 * s0 : 1e-8;
  double total = 0.0;
  std::size_t traded = 0;
  for (double si : solution.supplies.values) {
    total += si;
    if (si > threshold) ++traded;
  }
  obs.mean_supply = total / static_cast<double>(n);
  obs.traded_fraction = static_cast<double>(traded) / static_cast<double>(n);
  return obs;
}

}  // namespace mlab
