#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "mlab/dynamics.hpp"
#include "mlab/equilibrium.hpp"

using namespace mlab;

namespace {

MarketInstance market(double n, double eps, std::uint64_t seed, std::size_t omega = 16) {
  MarketParams p;
  p.omega_count = omega;
  p.complexity = n;
  p.premium_mean = eps;
  p.seed = seed;
  return generate_market(p);
}

}  // namespace

TEST_CASE("one step follows the score update") {
  const auto m = market(1.0, 0.2, 4, 8);
  std::vector<double> u0(m.instrument_count());
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = (i % 2 == 0) ? 0.5 : -0.5;
  LearningDynamics dyn(m, u0, 77);
  std::vector<unsigned char> on;
  const auto period = dyn.step(&on);
  double r = m.demand()[period.state];
  for (std::size_t i = 0; i < u0.size(); ++i) {
    CHECK(on[i] == (u0[i] > 0.0 ? 1 : 0));
    r += (u0[i] > 0.0 ? m.max_supply() : 0.0) * m.payoff(i, period.state);
  }
  CHECK(period.ret == doctest::Approx(r).epsilon(1e-14));
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const double expect = u0[i] - m.payoff(i, period.state) * r - m.premia()[i] / 8.0;
    CHECK(dyn.scores()[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("state sampler is uniform for uniform pi") {
  std::vector<double> pi(4, 0.25);
  StateSampler s(pi, 3);
  std::vector<int> counts(4, 0);
  for (int k = 0; k < 40000; ++k) ++counts[s()];
  for (int c : counts) CHECK(std::abs(c - 10000) < 5 * std::sqrt(40000 * 0.25 * 0.75));
}

TEST_CASE("decomposition bookkeeping") {
  const auto m = market(1.0, 0.1, 5);
  DynamicsConfig cfg;
  cfg.horizon = 20000;
  cfg.burn_in = 2000;
  cfg.seed = 1;
  cfg.record_series = true;
  const auto tr = run_dynamics(m, cfg);
  CHECK(tr.window == 18000);
  REQUIRE(tr.series_return.size() == 18000);
  // recompute state means from the series
  std::vector<double> sum(m.omega_count(), 0.0);
  std::vector<double> cnt(m.omega_count(), 0.0);
  for (std::size_t k = 0; k < tr.series_return.size(); ++k) {
    sum[tr.series_state[k]] += tr.series_return[k];
    cnt[tr.series_state[k]] += 1.0;
  }
  for (std::size_t w = 0; w < m.omega_count(); ++w) {
    CHECK(static_cast<double>(tr.state_visit_count[w]) == cnt[w]);
    CHECK(tr.state_mean_return[w] == doctest::Approx(sum[w] / cnt[w]).epsilon(1e-10));
  }
  const auto d = volatility_decomposition(tr);
  CHECK(d.sigma == doctest::Approx(tr.static_volatility));
  CHECK(d.v == doctest::Approx(tr.dynamic_volatility));
  CHECK(std::abs(tr.total_volatility - (d.sigma + d.v)) < 5.0 * tr.decomposition_stderr);
  for (double f : tr.supply_frequency) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("no instruments gives the demand variance") {
  const auto m = market(0.0, 0.1, 6);
  DynamicsConfig cfg = DynamicsConfig::defaults_for(m, 2);
  const auto tr = run_dynamics(m, cfg);
  CHECK(tr.dynamic_volatility == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(tr.supply_frequency.empty());
}

TEST_CASE("huge premium switches every instrument off") {
  const auto m = market(2.0, 1e3, 7);
  DynamicsConfig cfg = DynamicsConfig::defaults_for(m, 3);
  const auto tr = run_dynamics(m, cfg);
  CHECK(tr.mean_supply_frequency() == 0.0);
  CHECK(tr.dynamic_volatility == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("default and stationary protocols") {
  const auto m = market(1.0, 0.01, 8, 64);
  const auto a = DynamicsConfig::defaults_for(m);
  CHECK(a.burn_in == 6400);
  CHECK(a.horizon == 6400 + 57600);
  const auto b = DynamicsConfig::stationary_for(m);
  CHECK(b.burn_in > a.burn_in);
  CHECK(b.horizon - b.burn_in == 57600);
  DynamicsConfig bad;
  bad.horizon = 10;
  bad.burn_in = 10;
  CHECK_THROWS_AS(bad.validate(m.instrument_count()), ValidationError);
}

TEST_CASE("same seed gives identical traces") {
  const auto m = market(2.0, 0.05, 9);
  const auto cfg = DynamicsConfig::defaults_for(m, 11);
  const auto a = run_dynamics(m, cfg);
  const auto b = run_dynamics(m, cfg);
  CHECK(a.total_volatility == b.total_volatility);
  CHECK(a.final_scores == b.final_scores);
}

TEST_CASE("independent approximation forms") {
  std::vector<double> s{0.0, 0.5, 1.0, 0.25};
  CHECK(independent_approx_V(s, 4, 1.0) == doctest::Approx((0.25 + 0.1875) / 4.0));
  CHECK(independent_approx_V_representative(2.0, 1.0, 0.4, 0.3) == doctest::Approx(0.2));
  const auto m = market(1.0, 0.1, 10);
  std::vector<double> f(m.instrument_count(), 0.5);
  const double exact = independent_approx_V(m, f);
  const double mc = resampled_independent_V(m, f, 20000, 5);
  CHECK(mc == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("series binary layout") {
  const auto m = market(1.0, 0.1, 12, 4);
  DynamicsConfig cfg;
  cfg.horizon = 30;
  cfg.burn_in = 10;
  cfg.record_series = true;
  const auto tr = run_dynamics(m, cfg);
  const std::string path = "series_test.bin";
  write_series_binary(tr, path);
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "MLTS");
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  CHECK(count == 20);
  in.seekg(0, std::ios::end);
  CHECK(static_cast<std::size_t>(in.tellg()) == 12 + 20 * (8 + 4 + 8));
  in.close();
  std::remove(path.c_str());
}
