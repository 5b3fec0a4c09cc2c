#include "mlab/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlab/parallel.hpp"

namespace mlab {

namespace {

constexpr double kEpsFloor = 1e-6;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

SaddleParams nstar_params(double n, double eps, const NstarOptions& o) {
  SaddleParams p = SaddleParams::homogeneous(n, eps, o.delta, o.max_supply, o.demand_mean);
  p.premium_variance = o.premium_variance;
  return p;
}

}  // namespace

CriticalPoint critical_point(double z0) {
  if (!(z0 > 0.0) || !std::isfinite(z0)) throw std::invalid_argument("critical_line: z0 must be positive and finite");
  const double tail = gauss::sf(z0);
  // 1 - I2/I1 = z0 (phi(z0) - z0 tail) / tail, without the cancellation.
  const double excess = gauss::pdf(z0) - z0 * tail;
  CriticalPoint pt;
  pt.z0 = z0;
  pt.ratio = std::sqrt(z0 * tail / excess);
  pt.n_critical = 1.0 / tail;
  return pt;
}

std::vector<CriticalPoint> critical_line(const std::vector<double>& z0_grid) {
  std::vector<CriticalPoint> line;
  line.reserve(z0_grid.size());
  for (double z0 : z0_grid) line.push_back(critical_point(z0));
  std::stable_sort(line.begin(), line.end(),
                   [](const CriticalPoint& a, const CriticalPoint& b) { return a.n_critical < b.n_critical; });
  return line;
}

double critical_complexity_for_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw std::invalid_argument("critical ratio must be positive and finite");
  // ratio(z0) >= z0, so the root lies in (0, ratio].
  double lo = 0.0, hi = ratio;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (critical_point(mid).ratio > ratio) hi = mid;
    else lo = mid;
  }
  const double z0 = 0.5 * (lo + hi);
  return z0 > 0.0 ? critical_point(z0).n_critical : 2.0;
}

bool is_critical_complexity(double n, const NstarOptions& o) {
  const double eps1 = std::max(o.epsilon, kEpsFloor);
  const SaddleState s1 = solve_saddle(nstar_params(n, eps1, o));
  if (s1.status == SaddleStatus::Critical) return true;
  if (s1.status != SaddleStatus::Converged) return false;
  const SaddleState s2 = solve_saddle(nstar_params(n, 10.0 * eps1, o));
  if (s2.status != SaddleStatus::Converged) return false;
  return s2.nu / s1.nu > std::sqrt(10.0);
}

bool is_collapsed(double n, const NstarOptions& o) {
  const double eps1 = std::max(o.epsilon, kEpsFloor);
  const SaddleParams p = nstar_params(n, eps1, o);
  const SaddleState s = solve_saddle(p);
  if (s.status == SaddleStatus::Critical) return true;
  if (s.status != SaddleStatus::Converged) return false;
  return saddle_observables(s, p).volatility <= o.collapse_fraction * o.delta;
}

NstarResult find_nstar(const NstarOptions& o) {
  if (!std::isfinite(o.max_supply)) throw std::invalid_argument("find_nstar: max_supply must be finite");
  if (o.epsilon < 0.0) throw std::invalid_argument("find_nstar: epsilon must be >= 0");
  const bool quenched = o.premium_variance > 0.0;
  auto critical = [&](double n) { return quenched ? is_collapsed(n, o) : is_critical_complexity(n, o); };

  NstarResult out;
  out.method = quenched ? NstarMethod::Collapse : NstarMethod::Divergence;
  double lo = 0.0;
  double hi = kNan;
  for (double n = o.scan_step; n <= o.n_max + 1e-12; n += o.scan_step) {
    if (critical(n)) {
      hi = n;
      break;
    }
    lo = n;
  }
  if (std::isnan(hi)) throw NoCriticalPoint("no critical complexity in (0, " + std::to_string(o.n_max) + "]");
  while (hi - lo > o.bracket_width) {
    const double mid = 0.5 * (lo + hi);
    if (critical(mid)) hi = mid;
    else lo = mid;
  }
  out.lower = lo;
  out.upper = hi;
  out.n_star = 0.5 * (lo + hi);
  return out;
}

const char* to_string(SupplyMode mode) { return mode == SupplyMode::Bounded ? "bounded" : "unbounded"; }

PhaseCell solve_phase_cell(const PhaseSweepSpec& spec, double n, double eps, double eps_var) {
  PhaseCell cell;
  cell.mode = spec.mode;
  cell.n = n;
  cell.eps_mean = eps;
  cell.eps_var = eps_var;
  cell.g = cell.chi = cell.sigma = cell.mean_supply = cell.residual = kNan;
  SaddleParams p = SaddleParams::homogeneous(
      n, eps, spec.delta, spec.mode == SupplyMode::Bounded ? spec.max_supply : gauss::kInf, spec.demand_mean);
  p.premium_variance = eps_var;
  try {
    const SaddleState s = solve_saddle_any(p, spec.solver);
    cell.residual = s.residual;
    switch (s.status) {
      case SaddleStatus::Converged: {
        const auto obs = saddle_observables(s, p);
        cell.status = "finite";
        cell.g = s.g;
        cell.chi = s.chi();
        cell.sigma = obs.volatility;
        cell.mean_supply = obs.mean_supply;
        break;
      }
      case SaddleStatus::Critical:
        cell.status = "critical";
        cell.g = s.g;
        cell.chi = gauss::kInf;
        break;
      case SaddleStatus::Divergent:
        cell.status = "divergent";
        cell.g = gauss::kInf;
        cell.mean_supply = gauss::kInf;
        break;
      case SaddleStatus::NonConvergence:
        cell.status = "nonconvergence";
        break;
    }
  } catch (const std::exception&) {
    cell.status = "error";
  }
  return cell;
}

PhaseDiagram sweep_phase_diagram(const PhaseSweepSpec& spec, std::size_t workers) {
  if (spec.n_grid.empty() || spec.eps_grid.empty() || spec.eps_var_grid.empty()) {
    throw std::invalid_argument("sweep_phase_diagram: grids must be nonempty");
  }
  const std::size_t nn = spec.n_grid.size();
  const std::size_t ne = spec.eps_grid.size();
  PhaseDiagram diagram;
  diagram.cells.resize(nn * ne * spec.eps_var_grid.size());
  parallel_for(diagram.cells.size(), workers, [&](std::size_t k) {
    const std::size_t in = k % nn;
    const std::size_t ie = (k / nn) % ne;
    const std::size_t iv = k / (nn * ne);
    diagram.cells[k] = solve_phase_cell(spec, spec.n_grid[in], spec.eps_grid[ie], spec.eps_var_grid[iv]);
  });
  return diagram;
}

}  // namespace mlab
