#include <doctest.h>

#include <cmath>
#include <limits>

#include "mlab/saddle.hpp"
#include "oracles.hpp"

using namespace mlab;

namespace {

// n E[s^2] and n P(interior) at (g, c) with Gaussian premia integrated
// explicitly instead of folded into the field.
std::pair<double, double> quenched_rhs(const SaddleParams& p, double g, double c) {
  const double w = 1.0 - c;
  const double alpha = std::sqrt(g + p.demand_second_moment);
  const double sd = std::sqrt(p.premium_variance);
  auto over_eps = [&](auto f) {
    return oracle::integrate(
        [&](double x) { return oracle::phi(x) * f(p.premium_mean + sd * x); }, -9.0, 9.0);
  };
  const double m2 = over_eps([&](double eps) {
    return oracle::clipped_moments(alpha, eps / w, p.max_supply).m2;
  });
  const double pint = over_eps([&](double eps) {
    const double a = alpha, b = eps / w;
    return oracle::integrate([](double z) { return oracle::phi(z); }, b / a, (b + p.max_supply) / a);
  });
  return {p.complexity * m2, p.complexity * pint};
}

}  // namespace

TEST_CASE("homogeneous fixed point satisfies both equations") {
  for (double n : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    for (double eps : {0.01, 0.1, 0.5}) {
      const auto p = SaddleParams::homogeneous(n, eps);
      const auto st = solve_saddle(p);
      REQUIRE(st.status == SaddleStatus::Converged);
      const double w = 1.0 - st.chi_ratio;
      const auto ref = oracle::clipped_moments(std::sqrt(st.g + 1.0), eps / w, 1.0);
      CHECK(st.g == doctest::Approx(n * ref.m2).epsilon(1e-8));
      const double a = std::sqrt(st.g + 1.0), b = eps / w;
      const double pint = oracle::integrate([](double z) { return oracle::phi(z); }, b / a, (b + 1.0) / a);
      CHECK(st.chi_ratio == doctest::Approx(n * pint).epsilon(1e-8));
      // chi = c/(1-c) with nu = 1/(1+chi)
      CHECK(st.nu == doctest::Approx(1.0 / (1.0 + st.chi())).epsilon(1e-12));
      CHECK(saddle_residual(p, st.g, st.chi_ratio) < 1e-8);
    }
  }
}

TEST_CASE("homogeneous chi formula agrees with the general form") {
  // chi = n E[s z] / (sqrt(g + Delta) - n E[s z]) at zero premium spread
  for (double n : {0.5, 2.0, 4.0}) {
    for (double eps : {0.02, 0.3}) {
      const auto p = SaddleParams::homogeneous(n, eps);
      const auto st = solve_saddle(p);
      REQUIRE(st.finite());
      const double w = 1.0 - st.chi_ratio;
      const double root = std::sqrt(st.g + 1.0);
      const double m1 = oracle::clipped_moments(root, eps / w, 1.0).m1;
      CHECK(st.chi() == doctest::Approx(n * m1 / (root - n * m1)).epsilon(1e-7));
    }
  }
}

TEST_CASE("quenched premia match an explicit premium average") {
  for (double var : {0.01, 0.25, 1.0}) {
    SaddleParams p = SaddleParams::homogeneous(3.0, 0.1);
    p.premium_variance = var;
    const auto st = solve_saddle(p);
    REQUIRE(st.status == SaddleStatus::Converged);
    const auto [g_rhs, c_rhs] = quenched_rhs(p, st.g, st.chi_ratio);
    CHECK(st.g == doctest::Approx(g_rhs).epsilon(1e-7));
    CHECK(st.chi_ratio == doctest::Approx(c_rhs).epsilon(1e-7));
  }
}

TEST_CASE("limits") {
  const auto tiny = solve_saddle(SaddleParams::homogeneous(1e-8, 0.1));
  CHECK(tiny.g < 1e-7);
  CHECK(tiny.chi_ratio < 1e-7);
  // premium far above any marginal profit: nobody supplies
  const auto p = SaddleParams::homogeneous(4.0, 50.0);
  const auto st = solve_saddle(p);
  CHECK(st.g < 1e-12);
  const auto obs = saddle_observables(st, p);
  CHECK(obs.volatility == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(obs.mean_supply < 1e-12);
  // very negative premium: everything at s0, g = n s0^2
  const auto full = solve_saddle(SaddleParams::homogeneous(2.0, -200.0));
  CHECK(full.g == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("static volatility falls with complexity") {
  double prev = std::numeric_limits<double>::infinity();
  for (double n = 0.25; n <= 16.0; n *= 1.5) {
    const auto p = SaddleParams::homogeneous(n, 0.1);
    const auto st = solve_saddle(p);
    REQUIRE(st.finite());
    const double sigma = saddle_observables(st, p).volatility;
    CHECK(sigma < prev);
    prev = sigma;
  }
}

TEST_CASE("demand mean enters only through the drift") {
  SaddleParams p = SaddleParams::homogeneous(2.0, 0.1, 1.0, 1.0, 0.5);
  CHECK(p.demand_second_moment == doctest::Approx(1.25));
  CHECK(p.demand_variance() == doctest::Approx(1.0));
  const auto st = solve_saddle(p);
  const auto obs = saddle_observables(st, p);
  CHECK(obs.mean_return == doctest::Approx(0.5 * (1.0 - st.chi_ratio)));
  CHECK(obs.sharpe == doctest::Approx(0.5 / std::sqrt(st.g + 1.0)));
}

TEST_CASE("unbounded supply at zero premium") {
  for (double n : {0.5, 1.0, 1.5, 1.9}) {
    auto p = SaddleParams::homogeneous(n, 0.0, 1.0, gauss::kInf);
    const auto st = solve_saddle_unbounded(p);
    REQUIRE(st.status == SaddleStatus::Converged);
    CHECK(std::abs(st.g - n / (2.0 - n)) < 1e-8);
    CHECK(st.chi_ratio == doctest::Approx(n / 2.0).epsilon(1e-10));
  }
  for (double n : {2.0, 2.5}) {
    auto p = SaddleParams::homogeneous(n, 0.0, 1.0, gauss::kInf);
    CHECK(solve_saddle_unbounded(p).status == SaddleStatus::Divergent);
  }
}

TEST_CASE("unbounded fixed point with positive premium") {
  auto p = SaddleParams::homogeneous(3.0, 0.4, 1.0, gauss::kInf);
  p.premium_variance = 0.09;
  const auto st = solve_saddle_unbounded(p);
  REQUIRE(st.status == SaddleStatus::Converged);
  const auto [g_rhs, c_rhs] = quenched_rhs(p, st.g, st.chi_ratio);
  CHECK(st.g == doctest::Approx(g_rhs).epsilon(1e-7));
  CHECK(st.chi_ratio == doctest::Approx(c_rhs).epsilon(1e-7));
}

TEST_CASE("dispatch and validation") {
  auto bounded = SaddleParams::homogeneous(1.0, 0.1);
  auto unbounded = SaddleParams::homogeneous(1.0, 0.1, 1.0, gauss::kInf);
  CHECK_THROWS_AS(solve_saddle(unbounded), std::invalid_argument);
  CHECK_THROWS_AS(solve_saddle_unbounded(bounded), std::invalid_argument);
  CHECK(solve_saddle_any(bounded).g == doctest::Approx(solve_saddle(bounded).g));
  SaddleParams bad = bounded;
  bad.complexity = -1.0;
  CHECK_THROWS_AS(solve_saddle(bad), std::invalid_argument);
  bad = bounded;
  bad.demand_second_moment = -1.0;
  CHECK_THROWS_AS(solve_saddle(bad), std::invalid_argument);
  SaddleState s;
  s.status = SaddleStatus::Critical;
  CHECK_THROWS_AS(saddle_observables(s, bounded), std::invalid_argument);
  CHECK(std::string(to_string(SaddleStatus::Divergent)) == "divergent");
}

TEST_CASE("critical status beyond the transition at tiny premium") {
  const auto st = solve_saddle(SaddleParams::homogeneous(8.0, 0.0));
  CHECK(st.status == SaddleStatus::Critical);
}
