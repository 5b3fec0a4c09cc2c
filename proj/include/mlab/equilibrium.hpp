#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlab/market.hpp"

namespace mlab {

/// H = 1/2 sum_w pi^w (r^w)^2 + sum_i (eps_i/omega) s_i.
double hamiltonian(const MarketInstance& market, const SupplyVector& s);

enum class EquilibriumStatus {
  Converged,       // KKT residual <= tol
  Stalled,         // H stopped decreasing: flat directions, observables still valid
  NonConvergence,  // max_sweeps exhausted
};

const char* to_string(EquilibriumStatus status);

struct EquilibriumOptions {
  /// Absolute KKT tolerance; non-positive selects 1e-10 / omega.
  double tol = 0.0;
  std::size_t max_sweeps = 100000;
  bool randomized_order = false;
  std::uint64_t order_seed = 0;
};

struct EquilibriumSolution {
  SupplyVector supplies;
  std::vector<double> returns;
  double hamiltonian_value = 0.0;
  double kkt_residual = 0.0;
  std::size_t sweeps = 0;
  EquilibriumStatus status = EquilibriumStatus::NonConvergence;
  /// Coordinates with zero curvature and negative premium, pinned at s0.
  std::vector<std::size_t> degenerate_coordinates;
};

/// Cyclic exact coordinate descent over the box [0, s0]^N.
EquilibriumSolution solve_equilibrium(const MarketInstance& market, const EquilibriumOptions& options = {});

/// Largest violation of the box-constrained first-order conditions.
double verify_kkt(const MarketInstance& market, const SupplyVector& s);

struct EquilibriumObservables {
  double volatility = 0.0;
  double mean_return = 0.0;
  std::optional<double> mean_supply;      // empty when N = 0
  std::optional<double> traded_fraction;  // empty when N = 0
};

EquilibriumObservables equilibrium_observables(const MarketInstance& market,
                                               const EquilibriumSolution& solution);

}  // namespace mlab
