#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <sys/wait.h>

#include "mlab/config.hpp"
#include "mlab/experiment.hpp"
#include "mlab/output.hpp"
#include "mlab/parallel.hpp"
#include "mlab/rng.hpp"

using namespace mlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mlab_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MLAB_BINARY) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("seed derivation depends on the full path") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(42, {a, b}));
  }
  CHECK(seen.size() == 400);
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(mix64(0) != mix64(1));
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 5) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no tasks expected"); });
}

TEST_CASE("config defaults and layering") {
  const auto cfg = build_config({}, {}, "saddle");
  CHECK(cfg.experiment == Experiment::Saddle);
  CHECK(cfg.samples == 20);
  CHECK(cfg.market.omega_count == 64);
  CHECK(cfg.sweep.n == std::vector<double>{1.0});
  CHECK(cfg.snapshot.count("market.omega_count") == 1);

  const auto doc = parse_key_values("# comment\nexperiment = equilibrium\nmarket.omega_count = 32\nseed = 5\n");
  const auto layered = build_config(doc, {{"market.omega_count", "16"}});
  CHECK(layered.experiment == Experiment::Equilibrium);
  CHECK(layered.market.omega_count == 16);
  CHECK(layered.seed == 5);

  const auto fig = build_config({}, {}, "figure1");
  CHECK(fig.sweep.n.size() == 13);
  CHECK(fig.sweep.n.front() == doctest::Approx(0.1));
  CHECK(fig.sweep.n.back() == doctest::Approx(10.0));
  CHECK(fig.samples == 20);
}

TEST_CASE("config errors name the key") {
  auto message = [](const KeyValues& kv) {
    try {
      build_config(kv, {}, "saddle");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{"samples", "0"}}).find("samples") != std::string::npos);
  CHECK(message({{"market.bogus", "1"}}).find("market.bogus") != std::string::npos);
  CHECK(message({{"market.complexity", "abc"}}).find("market.complexity") != std::string::npos);
  CHECK_THROWS_AS(parse_key_values("no equals sign here"), ConfigError);
  CHECK_THROWS_AS(build_config({}, {}, "figure99"), ConfigError);
}

TEST_CASE("grid syntax") {
  CHECK(parse_grid("k", "[1, 2.5, 4]") == std::vector<double>{1.0, 2.5, 4.0});
  CHECK(parse_grid("k", "3") == std::vector<double>{3.0});
  const auto lin = parse_grid("k", "linspace(0, 1, 5)");
  REQUIRE(lin.size() == 5);
  CHECK(lin[2] == doctest::Approx(0.5));
  const auto lg = parse_grid("k", "logspace(1, 100, 3)");
  REQUIRE(lg.size() == 3);
  CHECK(lg[1] == doctest::Approx(10.0));
  CHECK(parse_grid("k", "range(0, 1, 0.25)").size() == 5);
  CHECK_THROWS_AS(parse_grid("k", "linspace(0, 1)"), ConfigError);
}

TEST_CASE("csv formatting and round trip") {
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::isnan(parse_csv_double("nan")));
  CHECK(parse_csv_double("-inf") == -INFINITY);
  CHECK(render_csv({}, {"a", "b"}) == "a,b\n");
  CHECK_THROWS_AS(render_csv({{1.0}}, {"a", "b"}), std::invalid_argument);

  const auto dir = scratch("csv");
  fs::create_directories(dir);
  const std::string path = (dir / "t.csv").string();
  const double x = 0.1 + 0.2;
  emit_csv({{x, std::int64_t{-3}, std::uint64_t{7}, std::string("ok")}}, {"x", "i", "u", "s"}, path);
  const auto t = read_csv(path);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.header == std::vector<std::string>{"x", "i", "u", "s"});
  CHECK(parse_csv_double(t.rows[0][0]) == x);
  CHECK(t.rows[0][3] == "ok");
  CHECK(file_digest(path).size() == 16);
  CHECK_THROWS_AS(emit_csv({}, {"a"}, "/nonexistent_dir/x.csv"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("artifacts are identical across worker counts") {
  for (const char* name : {"equilibrium", "dynamics", "saddle", "pricing", "phase"}) {
    KeyValues kv = {{"market.omega_count", "16"}, {"samples", "3"}, {"seed", "11"},
                    {"sweep.n", "[0.5, 2]"}, {"sweep.eps", "[0.1]"}};
    auto a = kv, b = kv;
    const auto da = scratch(std::string(name) + "_w1"), db = scratch(std::string(name) + "_w3");
    a.emplace_back("workers", "1");
    a.emplace_back("output_dir", da.string());
    b.emplace_back("workers", "3");
    b.emplace_back("output_dir", db.string());
    const auto ma = run_experiment(build_config(a, {}, name));
    const auto mb = run_experiment(build_config(b, {}, name));
    CHECK(ma.hard_failures() == 0);
    REQUIRE(ma.artifacts.size() == mb.artifacts.size());
    for (std::size_t k = 0; k < ma.artifacts.size(); ++k) {
      CHECK(ma.artifacts[k].path == mb.artifacts[k].path);
      CHECK(ma.artifacts[k].digest == mb.artifacts[k].digest);
    }
    CHECK(fs::exists(da / "manifest.json"));
    fs::remove_all(da);
    fs::remove_all(db);
  }
}

TEST_CASE("task seeds are schedule independent") {
  const auto cfg = build_config({{"seed", "3"}}, {}, "dynamics");
  CHECK(task_seed(cfg, 1, 2) == derive_seed(3, {static_cast<std::uint64_t>(Experiment::Dynamics) + 1, 1, 2}));
  CHECK(task_seed(cfg, 1, 2) != task_seed(cfg, 2, 1));
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("saddle --out " + dir.string() + " --set market.omega_count=8") == 0);
  CHECK(fs::exists(dir / "saddle.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(run_cli("nosuchexperiment") == 1);
  CHECK(run_cli("saddle --set samples=0 --out " + dir.string()) == 1);
  CHECK(run_cli("saddle --set market.bogus=1 --out " + dir.string()) == 1);
  CHECK(run_cli("saddle --config /nonexistent/cfg.txt") == 3);
  CHECK(run_cli("saddle --out /proc/forbidden_dir") == 3);
  CHECK(run_cli("") == 1);

  const auto cfg = dir / "cfg.txt";
  std::ofstream(cfg) << "experiment = critical_line\n";
  CHECK(run_cli("run --config " + cfg.string() + " --out " + dir.string()) == 1);
  std::ofstream(cfg) << "experiment = phase\nsweep.n = [1, 6]\nsweep.eps = [0.1]\n";
  CHECK(run_cli("run --config " + cfg.string() + " --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "phase.csv"));
  fs::remove_all(dir);
}
