#pragma once

#include <cstddef>

#include "mlab/gauss.hpp"

namespace mlab {

struct SaddleParams {
  double complexity = 0.0;        // n
  double premium_mean = 0.0;      // eps bar
  double premium_variance = 0.0;  // sigma_eps^2
  double demand_mean = 0.0;       // d bar
  double demand_second_moment = 1.0;  // <d^2> = d bar^2 + Delta
  double max_supply = 1.0;        // s0, may be infinite

  static SaddleParams homogeneous(double n, double eps, double delta = 1.0, double s0 = 1.0,
                                  double d_mean = 0.0);
  double demand_variance() const { return demand_second_moment - demand_mean * demand_mean; }
  void validate() const;
};

enum class SaddleStatus {
  Converged,
  Critical,        // c reached 1 - 1e-9: chi diverges
  Divergent,       // unbounded supply with no finite g
  NonConvergence,
};

const char* to_string(SaddleStatus status);

struct SaddleState {
  double g = 0.0;
  double chi_ratio = 0.0;  // c = chi/(1+chi)
  double r = 0.0;          // sqrt(w^2 (g + <d^2>) + sigma^2), w = 1 - c
  double nu = 1.0;         // 1/(1+chi) = 1 - c
  SaddleStatus status = SaddleStatus::NonConvergence;
  double residual = 0.0;
  std::size_t iterations = 0;

  double chi() const { return chi_ratio / (1.0 - chi_ratio); }
  bool finite() const { return status == SaddleStatus::Converged; }
};

struct SaddleOptions {
  double tol = 1e-10;
  double damping = 0.5;
  std::size_t max_iterations = 5000;
};

/// Representative supply s_z = clip(alpha z - beta, 0, s0) for a given (g, c).
struct RepresentativeSupply {
  double alpha = 0.0;
  double beta = 0.0;
};
RepresentativeSupply representative_supply(const SaddleParams& params, double g, double c);

/// max(|g - n m2| / max(1, g), |c - n P(interior)|), evaluated from scratch.
double saddle_residual(const SaddleParams& params, double g, double c);

/// Bounded supply. Damped iteration on (g, c), nested bisection when that fails.
SaddleState solve_saddle(const SaddleParams& params, const SaddleOptions& options = {});

/// Unbounded supply (s0 = inf), solved through the threshold z0 = eps bar / r.
SaddleState solve_saddle_unbounded(const SaddleParams& params, const SaddleOptions& options = {});

/// Dispatches on whether max_supply is finite.
SaddleState solve_saddle_any(const SaddleParams& params, const SaddleOptions& options = {});

struct SaddleObservables {
  double volatility = 0.0;   // (g + Delta)(1 - c)^2
  double mean_return = 0.0;  // d bar (1 - c)
  double mean_supply = 0.0;  // E[s_z]
  double traded_probability = 0.0;
  double sharpe = 0.0;  // d bar / sqrt(g + Delta)
};

/// Throws std::invalid_argument for a state that is not Converged.
SaddleObservables saddle_observables(const SaddleState& state, const SaddleParams& params);

}  // namespace mlab
