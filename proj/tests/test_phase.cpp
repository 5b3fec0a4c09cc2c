#include <doctest.h>

#include <cmath>

#include "mlab/phase.hpp"
#include "oracles.hpp"

using namespace mlab;

TEST_CASE("n star against the two-equation oracle") {
  const double ref = oracle::nstar_two_equation();
  const auto res = find_nstar();
  CHECK(res.method == NstarMethod::Divergence);
  CHECK(res.lower <= res.n_star);
  CHECK(res.n_star <= res.upper);
  CHECK(res.upper - res.lower <= 1e-4 + 1e-12);
  CHECK(std::abs(res.n_star - ref) < 5e-3);
}

TEST_CASE("classifier on both sides of n star") {
  const auto n = find_nstar().n_star;
  NstarOptions o;
  CHECK_FALSE(is_critical_complexity(n - 0.1, o));
  CHECK(is_critical_complexity(n + 0.1, o));
  CHECK(is_critical_complexity(10.0, o));
  CHECK_FALSE(is_critical_complexity(1.0, o));
}

TEST_CASE("quenched crossover grows with premium spread") {
  double prev = 0.0;
  for (double var : {1e-4, 1e-2, 1.0}) {
    NstarOptions o;
    o.premium_variance = var;
    const auto res = find_nstar(o);
    CHECK(res.method == NstarMethod::Collapse);
    CHECK(res.n_star > prev);
    prev = res.n_star;
  }
}

TEST_CASE("no transition below the scan limit") {
  NstarOptions o;
  o.n_max = 3.0;
  CHECK_THROWS_AS(find_nstar(o), NoCriticalPoint);
}

TEST_CASE("critical line endpoints and ordering") {
  const auto p = critical_point(1e-9);
  CHECK(p.n_critical == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(p.ratio < 1e-4);
  const auto line = critical_line({2.0, 0.1, 1.0, 0.5});
  for (std::size_t k = 1; k < line.size(); ++k) CHECK(line[k].n_critical > line[k - 1].n_critical);
  CHECK_THROWS_AS(critical_line({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(critical_line({-1.0}), std::invalid_argument);
  for (const auto& c : line) {
    CHECK(critical_complexity_for_ratio(c.ratio) == doctest::Approx(c.n_critical).epsilon(1e-9));
  }
}

TEST_CASE("critical line agrees with unbounded solver flips") {
  for (double z0 : {0.1, 0.5, 1.0, 2.0}) {
    const auto c = critical_point(z0);
    const double sd = 1.0;
    auto p = SaddleParams::homogeneous(c.n_critical - 1e-3, c.ratio * sd, 1.0, gauss::kInf);
    p.premium_variance = sd * sd;
    CHECK(solve_saddle_unbounded(p).status == SaddleStatus::Converged);
    p.complexity = c.n_critical + 1e-3;
    CHECK(solve_saddle_unbounded(p).status == SaddleStatus::Divergent);
  }
}

TEST_CASE("phase sweep layout and worker independence") {
  PhaseSweepSpec spec;
  spec.n_grid = {0.5, 2.0, 6.0};
  spec.eps_grid = {0.0, 0.1};
  spec.eps_var_grid = {0.0, 0.5};
  const auto a = sweep_phase_diagram(spec, 1);
  const auto b = sweep_phase_diagram(spec, 3);
  REQUIRE(a.cells.size() == 12);
  CHECK(a.cells[0].n == 0.5);
  CHECK(a.cells[1].n == 2.0);
  CHECK(a.cells[3].eps_mean == 0.1);
  CHECK(a.cells[6].eps_var == 0.5);
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    CHECK(a.cells[k].status == b.cells[k].status);
    CHECK(a.cells[k].g == b.cells[k].g);
  }
  CHECK(a.cells[2].status == "critical");
  CHECK(a.cells[0].status == "finite");

  spec.mode = SupplyMode::Unbounded;
  spec.n_grid = {1.0, 2.5};
  spec.eps_grid = {0.0};
  spec.eps_var_grid = {0.0};
  const auto u = sweep_phase_diagram(spec);
  CHECK(u.cells[0].status == "finite");
  CHECK(u.cells[1].status == "divergent");
}

TEST_CASE("bracketing around n star at eps 1e-6") {
  const auto n = find_nstar().n_star;
  const auto below = solve_saddle(SaddleParams::homogeneous(n - 0.1, 1e-6));
  CHECK(below.status == SaddleStatus::Converged);
  const auto above = solve_saddle(SaddleParams::homogeneous(n + 0.1, 1e-6));
  // chi of order 1/eps: either flagged or far larger than below
  CHECK((above.status == SaddleStatus::Critical || above.chi() > 100.0 * below.chi()));
}

TEST_CASE("slightly negative premium diverges at n = 2 for unbounded supply") {
  PhaseSweepSpec spec;
  spec.mode = SupplyMode::Unbounded;
  for (int k = 0; k <= 40; ++k) spec.n_grid.push_back(1.5 + 0.025 * k);
  spec.eps_grid = {-0.01};
  const auto d = sweep_phase_diagram(spec);
  double flip = 0.0;
  for (const auto& c : d.cells) {
    if (c.status == "divergent") {
      flip = c.n;
      break;
    }
  }
  CHECK(std::abs(flip - 2.0) <= 0.05);
}

TEST_CASE("one point sweep equals a direct solve") {
  PhaseSweepSpec spec;
  spec.n_grid = {3.0};
  spec.eps_grid = {0.2};
  spec.eps_var_grid = {0.1};
  const auto d = sweep_phase_diagram(spec);
  REQUIRE(d.cells.size() == 1);
  SaddleParams p = SaddleParams::homogeneous(3.0, 0.2);
  p.premium_variance = 0.1;
  const auto st = solve_saddle(p);
  CHECK(d.cells[0].g == st.g);
  CHECK(d.cells[0].chi == st.chi());
  CHECK(d.cells[0].sigma == saddle_observables(st, p).volatility);
}

TEST_CASE("quenched premia smooth the supply step") {
  auto jump = [](double var) {
    SaddleParams a = SaddleParams::homogeneous(8.0, -0.002), b = SaddleParams::homogeneous(8.0, 0.002);
    a.premium_variance = b.premium_variance = var;
    return std::abs(saddle_observables(solve_saddle(a), a).mean_supply -
                    saddle_observables(solve_saddle(b), b).mean_supply);
  };
  CHECK(jump(0.01) < 0.2 * jump(1e-6));
}

TEST_CASE("equal ratios give the same critical complexity") {
  CHECK(critical_complexity_for_ratio(1.0 / 1.0) == critical_complexity_for_ratio(3.0 / 3.0));
  const double a = critical_complexity_for_ratio(0.3);
  CHECK(std::abs(a - critical_complexity_for_ratio((0.3 * 7.0) / 7.0)) <= 1e-12);
}
