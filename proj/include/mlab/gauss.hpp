#pragma once

#include <limits>

// Standard-normal building blocks shared by the saddle-point and phase modules.
namespace mlab::gauss {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double pdf(double z);
double cdf(double z);
/// Upper tail 1 - cdf(z), accurate for large positive z.
double sf(double z);
/// P(a < z < b) without cancellation when both limits lie in the same tail.
double interval_probability(double a, double b);

/// Moments of s = clip(alpha*z - beta, 0, s0) for z ~ N(0,1).
struct ClippedMoments {
  double m0 = 0.0;  // E[s]
  double m1 = 0.0;  // E[s z]
  double m2 = 0.0;  // E[s^2]
  double interior_probability = 0.0;  // P(0 < s < s0)
  double positive_probability = 0.0;  // P(s > 0)
};

/// Closed form via density and tails; s0 may be +infinity. Throws
/// std::invalid_argument when alpha <= 0.
ClippedMoments clipped_gauss_moments(double alpha, double beta, double s0);

}  // namespace mlab::gauss

namespace mlab::gauss {

/// I1 = int_{z0}^inf phi(z)(z - z0) z dz and I2 = int_{z0}^inf phi(z)(z - z0)^2 dz.
struct ThresholdIntegrals {
  double i1 = 0.0;
  double i2 = 0.0;
};

ThresholdIntegrals threshold_integrals(double z0);

}  // namespace mlab::gauss
