#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlab/gauss.hpp"
#include "mlab/saddle.hpp"

namespace mlab {

using gauss::threshold_integrals;
using gauss::ThresholdIntegrals;

struct CriticalPoint {
  double z0 = 0.0;
  double ratio = 0.0;       // eps bar / sigma_eps
  double n_critical = 0.0;  // 1 / I1(z0)
};

/// Points of the unbounded-supply boundary, sorted by n. Throws
/// std::invalid_argument for z0 <= 0.
std::vector<CriticalPoint> critical_line(const std::vector<double>& z0_grid);
CriticalPoint critical_point(double z0);

/// n_c on the critical line for a given eps bar / sigma_eps > 0 (inverts
/// ratio(z0), which is increasing).
double critical_complexity_for_ratio(double ratio);

class NoCriticalPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NstarOptions {
  double delta = 1.0;
  double demand_mean = 0.0;
  double max_supply = 1.0;
  double epsilon = 0.0;           // evaluated as max(epsilon, 1e-6)
  double premium_variance = 0.0;  // > 0 selects the quenched crossover
  double n_max = 32.0;
  double scan_step = 0.25;
  double bracket_width = 1e-4;
  double collapse_fraction = 0.1;  // quenched: Sigma / Delta threshold
};

enum class NstarMethod { Divergence, Collapse };

struct NstarResult {
  double n_star = 0.0;
  double lower = 0.0;  // last n classified subcritical
  double upper = 0.0;  // first n classified critical
  NstarMethod method = NstarMethod::Divergence;
};

/// Whether n lies in the degenerate phase as eps -> 0+: the solver reports
/// Critical at eps1 = max(eps, 1e-6), or 1 + chi grows by more than sqrt(10)
/// between 10 eps1 and eps1 (chi ~ 1/eps beyond n*).
bool is_critical_complexity(double n, const NstarOptions& options);

/// Quenched premia keep chi finite at bounded supply; n* is then the
/// smallest n with Sigma(n) / Delta <= collapse_fraction.
bool is_collapsed(double n, const NstarOptions& options);

NstarResult find_nstar(const NstarOptions& options = {});

enum class SupplyMode { Bounded, Unbounded };
const char* to_string(SupplyMode mode);

struct PhaseCell {
  SupplyMode mode = SupplyMode::Bounded;
  double n = 0.0;
  double eps_mean = 0.0;
  double eps_var = 0.0;
  std::string status;  // finite | critical | divergent | nonconvergence | error
  double g = 0.0;
  double chi = 0.0;
  double sigma = 0.0;
  double mean_supply = 0.0;
  double residual = 0.0;
};

struct PhaseDiagram {
  std::vector<PhaseCell> cells;  // eps_var outer, eps_mean middle, n inner
};

struct PhaseSweepSpec {
  std::vector<double> n_grid;
  std::vector<double> eps_grid;
  std::vector<double> eps_var_grid{0.0};
  SupplyMode mode = SupplyMode::Bounded;
  double delta = 1.0;
  double demand_mean = 0.0;
  double max_supply = 1.0;  // ignored in unbounded mode
  SaddleOptions solver;
};

PhaseCell solve_phase_cell(const PhaseSweepSpec& spec, double n, double eps, double eps_var);
PhaseDiagram sweep_phase_diagram(const PhaseSweepSpec& spec, std::size_t workers = 1);

}  // namespace mlab
