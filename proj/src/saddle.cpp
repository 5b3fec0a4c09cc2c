#include "mlab/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlab {

namespace {

constexpr double kCriticalGap = 1e-9;  // c > 1 - kCriticalGap is Critical
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double scale_r(const SaddleParams& p, double g, double w) {
  return std::sqrt(w * w * (g + p.demand_second_moment) + p.premium_variance);
}

SaddleState make_state(const SaddleParams& p, double g, double c, SaddleStatus status) {
  SaddleState s;
  s.g = g;
  s.chi_ratio = c;
  s.nu = 1.0 - c;
  s.r = scale_r(p, g, s.nu);
  s.status = status;
  return s;
}

// Bracketed root of an increasing function by bisection.
template <class F>
double bisect(F&& f, double lo, double hi, int iterations = 200) {
  for (int k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// g solving g = n m2 at fixed w = 1 - c; g - n m2 is negative at 0 and
// nonnegative at n s0^2.
double inner_g(const SaddleParams& p, double w) {
  const double n = p.complexity;
  const double s0 = p.max_supply;
  auto defect = [&](double g) {
    const double alpha = std::sqrt(g + p.demand_second_moment + p.premium_variance / (w * w));
    return g - n * gauss::clipped_gauss_moments(alpha, p.premium_mean / w, s0).m2;
  };
  const double hi = n * s0 * s0;
  if (defect(hi) <= 0.0) return hi;
  return bisect(defect, 0.0, hi);
}

struct Iterate {
  double g_next = 0.0;
  double c_next = 0.0;
};

Iterate map_once(const SaddleParams& p, double g, double c) {
  const auto rep = representative_supply(p, g, c);
  const auto m = gauss::clipped_gauss_moments(rep.alpha, rep.beta, p.max_supply);
  return {p.complexity * m.m2, p.complexity * m.interior_probability};
}

bool damped_iteration(const SaddleParams& p, const SaddleOptions& o, SaddleState& out) {
  double g = 0.0, c = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t k = 0; k < o.max_iterations; ++k) {
    const Iterate next = map_once(p, g, c);
    const double res = std::max(std::abs(g - next.g_next) / std::max(1.0, g), std::abs(c - next.c_next));
    if (res <= o.tol) {
      out = make_state(p, g, c, SaddleStatus::Converged);
      out.iterations = k;
      return true;
    }
    if (res < 0.999 * best) {
      best = res;
      since_best = 0;
    } else if (++since_best > 50) {
      return false;  // oscillating or stuck
    }
    g = (1.0 - o.damping) * g + o.damping * next.g_next;
    c = (1.0 - o.damping) * c + o.damping * next.c_next;
    if (!(c < 1.0 - kCriticalGap) || c < 0.0) return false;
  }
  return false;
}

// Root of F(w) = (1 - w) - n P(w) over w = 1 - c in [kCriticalGap, 1], with
// g slaved to w through inner_g. F(1) <= 0.
SaddleState nested_bisection(const SaddleParams& p, const SaddleOptions& o) {
  auto interior = [&](double w, double g) {
    const double alpha = std::sqrt(g + p.demand_second_moment + p.premium_variance / (w * w));
    return gauss::clipped_gauss_moments(alpha, p.premium_mean / w, p.max_supply).interior_probability;
  };
  auto F = [&](double w) { return (1.0 - w) - p.complexity * interior(w, inner_g(p, w)); };

  const double w_min = kCriticalGap;
  if (F(w_min) <= 0.0) {
    SaddleState s = make_state(p, inner_g(p, w_min), 1.0 - w_min, SaddleStatus::Critical);
    s.residual = kNan;
    return s;
  }
  double lo = std::log(w_min), hi = 0.0;
  if (F(1.0) < 0.0) {
    // F decreases from positive to negative: keep F(lo) > 0, F(hi) < 0.
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (F(std::exp(mid)) > 0.0) lo = mid;
      else hi = mid;
    }
  } else {
    lo = hi;
  }
  const double w = std::exp(0.5 * (lo + hi));
  const double g = inner_g(p, w);
  SaddleState s = make_state(p, g, 1.0 - w, SaddleStatus::Converged);
  s.residual = saddle_residual(p, g, 1.0 - w);
  if (!(s.residual <= o.tol)) s.status = SaddleStatus::NonConvergence;
  return s;
}

}  // namespace

SaddleParams SaddleParams::homogeneous(double n, double eps, double delta, double s0, double d_mean) {
  SaddleParams p;
  p.complexity = n;
  p.premium_mean = eps;
  p.premium_variance = 0.0;
  p.demand_mean = d_mean;
  p.demand_second_moment = delta + d_mean * d_mean;
  p.max_supply = s0;
  return p;
}

void SaddleParams::validate() const {
  if (!(complexity >= 0.0) || std::isinf(complexity)) throw std::invalid_argument("saddle: complexity must be finite and >= 0");
  if (!std::isfinite(premium_mean)) throw std::invalid_argument("saddle: premium_mean must be finite");
  if (!(premium_variance >= 0.0) || std::isinf(premium_variance)) {
    throw std::invalid_argument("saddle: premium_variance must be finite and >= 0");
  }
  if (!std::isfinite(demand_mean)) throw std::invalid_argument("saddle: demand_mean must be finite");
  if (!(demand_second_moment >= demand_mean * demand_mean) || std::isinf(demand_second_moment)) {
    throw std::invalid_argument("saddle: demand_second_moment must be >= demand_mean^2");
  }
  if (!(max_supply > 0.0)) throw std::invalid_argument("saddle: max_supply must be positive");
}

const char* to_string(SaddleStatus status) {
  switch (status) {
    case SaddleStatus::Converged: return "converged";
    case SaddleStatus::Critical: return "critical";
    case SaddleStatus::Divergent: return "divergent";
    case SaddleStatus::NonConvergence: return "nonconvergence";
  }
  return "unknown";
}

RepresentativeSupply representative_supply(const SaddleParams& p, double g, double c) {
  const double w = 1.0 - c;
  return {std::sqrt(g + p.demand_second_moment + p.premium_variance / (w * w)), p.premium_mean / w};
}

double saddle_residual(const SaddleParams& p, double g, double c) {
  if (!(c < 1.0) || !std::isfinite(g)) return std::numeric_limits<double>::infinity();
  const auto rep = representative_supply(p, g, c);
  const auto m = gauss::clipped_gauss_moments(rep.alpha, rep.beta, p.max_supply);
  const double n = p.complexity;
  return std::max(std::abs(g - n * m.m2) / std::max(1.0, g), std::abs(c - n * m.interior_probability));
}

SaddleState solve_saddle(const SaddleParams& params, const SaddleOptions& options) {
  params.validate();
  if (!std::isfinite(params.max_supply)) throw std::invalid_argument("solve_saddle: max_supply must be finite");
  if (params.complexity == 0.0) return make_state(params, 0.0, 0.0, SaddleStatus::Converged);

  SaddleState s;
  if (damped_iteration(params, options, s)) {
    s.residual = saddle_residual(params, s.g, s.chi_ratio);
    if (s.chi_ratio > 1.0 - kCriticalGap) s.status = SaddleStatus::Critical;
    return s;
  }
  return nested_bisection(params, options);
}

SaddleState solve_saddle_unbounded(const SaddleParams& params, const SaddleOptions& options) {
  params.validate();
  if (std::isfinite(params.max_supply)) {
    throw std::invalid_argument("solve_saddle_unbounded: max_supply must be infinite");
  }
  const double n = params.complexity;
  const double d2 = params.demand_second_moment;
  const double sig2 = params.premium_variance;
  const double eps = params.premium_mean;
  if (n == 0.0) return make_state(params, 0.0, 0.0, SaddleStatus::Converged);

  // Feasible thresholds: n I1 < 1 and n I2 < 1. Both decrease in z0.
  auto load = [&](double z) {
    const auto t = gauss::threshold_integrals(z);
    return n * std::max(t.i1, t.i2);
  };
  double z_hi = 0.0;
  while (load(z_hi) >= 1.0) z_hi = 2.0 * z_hi + 1.0;
  double z_lo = -1.0;
  while (load(z_lo) < 1.0) z_lo *= 2.0;
  const double z_min = bisect([&](double z) { return 1.0 - load(z); }, z_lo, z_hi);

  // h(z0) = r(z0) z0 - eps, with c = n I1 and g eliminated exactly.
  auto h = [&](double z) {
    const auto t = gauss::threshold_integrals(z);
    const double w = 1.0 - n * t.i1;
    const double denom = 1.0 - n * t.i2;
    if (!(w > 0.0) || !(denom > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::sqrt((d2 * w * w + sig2) / denom) * z - eps;
  };

  double top = std::max(0.0, z_min) + 1.0;
  int doublings = 0;
  while (!(h(top) > 0.0) && doublings++ < 200) top = 2.0 * top + 1.0;

  // Quadratic spacing resolves the region next to the feasibility edge.
  constexpr int kScan = 4000;
  double prev_z = z_min + 1e-14 * (top - z_min);
  double prev_h = h(prev_z);
  double left = 0.0, right = 0.0;
  bool bracketed = false;
  for (int k = 1; k <= kScan && !bracketed; ++k) {
    const double t = static_cast<double>(k) / kScan;
    const double z = z_min + (top - z_min) * t * t;
    const double hz = h(z);
    if (prev_h < 0.0 && hz >= 0.0) {
      left = prev_z;
      right = z;
      bracketed = true;
    }
    prev_z = z;
    prev_h = hz;
  }
  if (!bracketed) {
    SaddleState s = make_state(params, std::numeric_limits<double>::infinity(), kNan, SaddleStatus::Divergent);
    s.residual = kNan;
    return s;
  }
  const double z0 = bisect(h, left, right);
  const auto t = gauss::threshold_integrals(z0);
  const double c = n * t.i1;
  const double w = 1.0 - c;
  const double g = n * t.i2 * (d2 + sig2 / (w * w)) / (1.0 - n * t.i2);
  SaddleState s = make_state(params, g, c, SaddleStatus::Converged);
  s.residual = saddle_residual(params, g, c);
  if (c > 1.0 - kCriticalGap) s.status = SaddleStatus::Critical;
  else if (!(s.residual <= options.tol)) s.status = SaddleStatus::NonConvergence;
  return s;
}

SaddleState solve_saddle_any(const SaddleParams& params, const SaddleOptions& options) {
  return std::isfinite(params.max_supply) ? solve_saddle(params, options) : solve_saddle_unbounded(params, options);
}

SaddleObservables saddle_observables(const SaddleState& state, const SaddleParams& params) {
  if (state.status != SaddleStatus::Converged) {
    throw std::invalid_argument(std::string("saddle_observables: state is ") + to_string(state.status));
  }
  const double w = 1.0 - state.chi_ratio;
  const double delta = params.demand_variance();
  const auto rep = representative_supply(params, state.g, state.chi_ratio);
  const auto m = gauss::clipped_gauss_moments(rep.alpha, rep.beta, params.max_supply);
  SaddleObservables o;
  o.volatility = (state.g + delta) * w * w;
  o.mean_return = params.demand_mean * w;
  o.mean_supply = m.m0;
  o.traded_probability = m.positive_probability;
  o.sharpe = params.demand_mean / std::sqrt(state.g + delta);
  return o;
}

}  // namespace mlab
