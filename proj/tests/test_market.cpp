#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mlab/equilibrium.hpp"
#include "mlab/market.hpp"
#include "mlab/rng.hpp"
#include "oracles.hpp"

using namespace mlab;

namespace {

MarketParams small(std::uint64_t seed, double n = 1.5, std::size_t omega = 16) {
  MarketParams p;
  p.omega_count = omega;
  p.complexity = n;
  p.premium_mean = 0.05;
  p.premium_variance = 0.01;
  p.demand_mean = 0.2;
  p.seed = seed;
  return p;
}

std::vector<double> random_supply(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  for (auto& x : s) x = u(rng);
  return s;
}

}  // namespace

TEST_CASE("generation is deterministic and shaped") {
  const auto a = generate_market(small(7));
  const auto b = generate_market(small(7));
  const auto c = generate_market(small(8));
  CHECK(a.instrument_count() == 24);
  CHECK(a.omega_count() == 16);
  CHECK(std::equal(a.payoffs().begin(), a.payoffs().end(), b.payoffs().begin()));
  CHECK_FALSE(std::equal(a.payoffs().begin(), a.payoffs().end(), c.payoffs().begin()));
  double total = std::accumulate(a.probabilities().begin(), a.probabilities().end(), 0.0);
  CHECK(total == doctest::Approx(1.0));
  for (std::size_t i = 0; i < a.instrument_count(); ++i) {
    for (std::size_t w = 0; w < a.omega_count(); ++w) {
      CHECK(a.state_payoffs(w)[i] == a.payoff(i, w));
      CHECK(a.instrument_payoffs(i)[w] == a.payoff(i, w));
    }
  }
}

TEST_CASE("payoff and demand moments") {
  MarketParams p = small(3, 4.0, 200);
  p.demand_variance = 2.0;
  const auto m = generate_market(p);
  const auto pay = m.payoffs();
  const double count = static_cast<double>(pay.size());
  double mean = 0.0, sq = 0.0;
  for (double a : pay) {
    mean += a;
    sq += a * a;
  }
  mean /= count;
  sq /= count;
  const double var = 1.0 / 200.0;
  CHECK(std::abs(mean) < 5.0 * std::sqrt(var / count));
  CHECK(std::abs(sq - var) < 5.0 * var * std::sqrt(2.0 / count));

  double dm = 0.0, dv = 0.0;
  for (double d : m.demand()) dm += d;
  dm /= 200.0;
  for (double d : m.demand()) dv += (d - dm) * (d - dm);
  dv /= 199.0;
  CHECK(std::abs(dm - 0.0) < 5.0 * std::sqrt(2.0 / 200.0));
  CHECK(std::abs(dv - 2.0) < 5.0 * 2.0 * std::sqrt(2.0 / 199.0));

  double em = 0.0;
  for (double e : m.premia()) em += e;
  em /= static_cast<double>(m.instrument_count());
  CHECK(std::abs(em - 0.05) < 5.0 * std::sqrt(0.01 / static_cast<double>(m.instrument_count())));
}

TEST_CASE("returns and hamiltonian match naive loops") {
  const auto m = generate_market(small(11));
  const auto s = random_supply(m.instrument_count(), 5);
  const auto r = compute_returns(m, SupplyVector(s));
  const auto ref = oracle::returns(m, s);
  for (std::size_t w = 0; w < r.size(); ++w) CHECK(r[w] == doctest::Approx(ref[w]).epsilon(1e-13));
  CHECK(hamiltonian(m, SupplyVector(s)) == doctest::Approx(oracle::hamiltonian(m, s)).epsilon(1e-13));
}

TEST_CASE("returns are affine in the supply") {
  const auto m = generate_market(small(12));
  const auto s1 = random_supply(m.instrument_count(), 1);
  const auto s2 = random_supply(m.instrument_count(), 2);
  std::vector<double> mix(s1.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.3 * s1[i] + 0.7 * s2[i];
  const auto r1 = compute_returns(m, SupplyVector(s1));
  const auto r2 = compute_returns(m, SupplyVector(s2));
  const auto rm = compute_returns(m, SupplyVector(mix));
  for (std::size_t w = 0; w < rm.size(); ++w) CHECK(rm[w] == doctest::Approx(0.3 * r1[w] + 0.7 * r2[w]));
}

TEST_CASE("profit gap is minus the finite-difference gradient of H") {
  const double h = 1e-5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = generate_market(small(100 + seed));
    auto s = random_supply(m.instrument_count(), seed);
    const auto r = compute_returns(m, SupplyVector(s));
    for (std::size_t i = 0; i < m.instrument_count(); ++i) {
      auto up = s, down = s;
      up[i] += h;
      down[i] -= h;
      const double grad = (oracle::hamiltonian(m, up) - oracle::hamiltonian(m, down)) / (2.0 * h);
      CHECK(std::abs(profit_gap(m, r, i) + grad) < 1e-6);
    }
  }
}

TEST_CASE("validation") {
  MarketParams p;
  p.omega_count = 0;
  CHECK_THROWS_AS(generate_market(p), ValidationError);
  p = MarketParams{};
  p.complexity = -1.0;
  CHECK_THROWS_AS(generate_market(p), ValidationError);
  p = MarketParams{};
  p.demand_variance = -1.0;
  CHECK_THROWS_AS(generate_market(p), ValidationError);
  p = MarketParams{};
  p.max_supply = 0.0;
  CHECK_THROWS_AS(generate_market(p), ValidationError);
  const auto m = generate_market(small(1));
  CHECK_THROWS_AS(compute_returns(m, SupplyVector::zeros(3)), ValidationError);
  CHECK_THROWS_AS(profit_gap(m, compute_returns(m, SupplyVector::zeros(m.instrument_count())),
                             m.instrument_count()),
                  ValidationError);
}

TEST_CASE("zero instruments") {
  MarketParams p = small(1, 0.0);
  const auto m = generate_market(p);
  CHECK(m.instrument_count() == 0);
  const auto r = compute_returns(m, SupplyVector{});
  for (std::size_t w = 0; w < m.omega_count(); ++w) CHECK(r[w] == m.demand()[w]);
}

TEST_CASE("json round trip") {
  const auto m = generate_market(small(21));
  const auto back = market_from_json(market_to_json(m));
  CHECK(back.instrument_count() == m.instrument_count());
  CHECK(std::equal(m.payoffs().begin(), m.payoffs().end(), back.payoffs().begin()));
  CHECK(std::equal(m.premia().begin(), m.premia().end(), back.premia().begin()));
  CHECK(std::equal(m.demand().begin(), m.demand().end(), back.demand().begin()));
  CHECK(back.max_supply() == m.max_supply());
}
