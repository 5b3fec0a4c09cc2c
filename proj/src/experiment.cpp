#include "mlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>

#include "mlab/dynamics.hpp"
#include "mlab/equilibrium.hpp"
#include "mlab/market.hpp"
#include "mlab/output.hpp"
#include "mlab/parallel.hpp"
#include "mlab/phase.hpp"
#include "mlab/pricing.hpp"
#include "mlab/rng.hpp"
#include "mlab/saddle.hpp"

namespace mlab {

namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Cell {
  double n = 0.0;
  double eps = 0.0;
  double eps_var = 0.0;
};

// eps_var outer, eps middle, n inner.
std::vector<Cell> grid_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (double v : cfg.sweep.eps_var) {
    for (double e : cfg.sweep.eps) {
      for (double n : cfg.sweep.n) cells.push_back({n, e, v});
    }
  }
  return cells;
}

struct Moments {
  double mean = kNan;
  double stderr_mean = kNan;
  std::size_t count = 0;
};

Moments moments_of(const std::vector<double>& xs) {
  double s = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    if (std::isfinite(x)) {
      s += x;
      ++k;
    }
  }
  Moments m;
  m.count = k;
  if (k == 0) return m;
  m.mean = s / static_cast<double>(k);
  if (k < 2) return m;
  double ss = 0.0;
  for (double x : xs) {
    if (std::isfinite(x)) ss += (x - m.mean) * (x - m.mean);
  }
  m.stderr_mean = std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
  return m;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

SaddleParams saddle_params(const ExperimentConfig& cfg, const Cell& c, double s0) {
  SaddleParams p = SaddleParams::homogeneous(c.n, c.eps, cfg.market.demand_variance, s0, cfg.market.demand_mean);
  p.premium_variance = c.eps_var;
  return p;
}

SaddleOptions saddle_options(const ExperimentConfig& cfg) {
  SaddleOptions o;
  o.tol = cfg.solver.tol;
  o.damping = cfg.solver.damping;
  o.max_iterations = cfg.solver.max_iterations;
  return o;
}

MarketParams market_params(const ExperimentConfig& cfg, const Cell& c, std::uint64_t seed) {
  MarketParams p = cfg.market;
  p.complexity = c.n;
  p.premium_mean = c.eps;
  p.premium_variance = c.eps_var;
  p.seed = seed;
  return p;
}

DynamicsConfig dynamics_config(const ExperimentConfig& cfg, const MarketInstance& m, std::uint64_t seed) {
  DynamicsConfig d = cfg.dynamics.stationary ? DynamicsConfig::stationary_for(m, seed) : DynamicsConfig::defaults_for(m, seed);
  const std::size_t window = cfg.dynamics.window ? cfg.dynamics.window : d.horizon - d.burn_in;
  if (cfg.dynamics.burn_in) d.burn_in = cfg.dynamics.burn_in;
  d.horizon = d.burn_in + window;
  d.record_series = cfg.dynamics.record_series;
  return d;
}

class Run {
 public:
  explicit Run(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.output_dir) {}

  const ExperimentConfig& cfg() const { return cfg_; }

  // Runs fn for every (cell, sample); fn fills the task status. Exceptions
  // become hard failures of that task only.
  void run_tasks(std::size_t cells, std::size_t samples, const std::function<void(TaskRecord&)>& fn) {
    const std::size_t base = tasks_.size();
    for (std::size_t c = 0; c < cells; ++c) {
      for (std::size_t s = 0; s < samples; ++s) {
        TaskRecord t;
        t.index = tasks_.size();
        t.cell = c;
        t.sample = s;
        t.seed = task_seed(cfg_, c, s);
        tasks_.push_back(t);
      }
    }
    parallel_for(cells * samples, cfg_.workers, [&](std::size_t k) {
      TaskRecord& t = tasks_[base + k];
      try {
        fn(t);
      } catch (const std::exception& e) {
        t.status = "error";
        t.message = e.what();
        t.hard_failure = true;
      }
    });
  }

  void csv(const std::string& name, const std::vector<std::string>& schema, const std::vector<CsvRow>& rows) {
    emit_csv(rows, schema, (dir_ / name).string());
    record(name);
  }

  void json(const std::string& name, const nlohmann::json& doc) {
    emit_json(doc, (dir_ / name).string());
    record(name);
  }

  void binary(const std::string& name, const DynamicsTrace& trace) {
    write_series_binary(trace, (dir_ / name).string());
    record(name);
  }

  nlohmann::json summary_base() const {
    nlohmann::json echo = nlohmann::json::object();
    for (const auto& [k, v] : cfg_.snapshot) {
      if (k != "workers" && k != "output_dir") echo[k] = v;
    }
    return {{"version", kVersion}, {"experiment", to_string(cfg_.experiment)}, {"seed", cfg_.seed}, {"config", echo}};
  }

  RunManifest finish(double seconds) {
    RunManifest m;
    m.experiment = to_string(cfg_.experiment);
    m.master_seed = cfg_.seed;
    m.config = nlohmann::json::object();
    for (const auto& [k, v] : cfg_.snapshot) m.config[k] = v;
    m.tasks = tasks_;
    m.artifacts = artifacts_;
    m.wall_clock_seconds = seconds;
    emit_json(m.to_json(), (dir_ / "manifest.json").string());
    return m;
  }

 private:
  void record(const std::string& name) {
    const std::string path = (dir_ / name).string();
    std::error_code ec;
    const auto bytes = fs::file_size(path, ec);
    if (ec) throw IoError(path, ec.message());
    artifacts_.push_back({name, bytes, file_digest(path)});
  }

  const ExperimentConfig& cfg_;
  fs::path dir_;
  std::vector<TaskRecord> tasks_;
  std::vector<Artifact> artifacts_;
};

// ---- equilibrium -----------------------------------------------------------

struct EquilibriumRow {
  std::uint64_t seed = 0;
  Cell cell;
  double sigma = kNan, mean_return = kNan, mean_supply = kNan, traded = kNan, h = kNan;
  std::size_t sweeps = 0;
};

std::vector<EquilibriumRow> equilibrium_tasks(Run& run, const std::vector<Cell>& cells) {
  const auto& cfg = run.cfg();
  std::vector<EquilibriumRow> rows(cells.size() * cfg.samples);
  run.run_tasks(cells.size(), cfg.samples, [&](TaskRecord& t) {
    EquilibriumRow& row = rows[t.cell * cfg.samples + t.sample];
    row.seed = t.seed;
    row.cell = cells[t.cell];
    const MarketInstance m = generate_market(market_params(cfg, cells[t.cell], t.seed));
    EquilibriumOptions opt;
    opt.tol = cfg.solver.kkt_tol;
    opt.max_sweeps = cfg.solver.max_sweeps;
    opt.randomized_order = cfg.solver.randomized_order;
    opt.order_seed = t.seed;
    const EquilibriumSolution sol = solve_equilibrium(m, opt);
    row.sweeps = sol.sweeps;
    if (sol.status == EquilibriumStatus::NonConvergence) {
      t.status = "nonconvergence";
      t.message = "kkt residual " + format_double(sol.kkt_residual);
      return;
    }
    if (sol.status == EquilibriumStatus::Stalled) t.status = "stalled";
    const auto obs = equilibrium_observables(m, sol);
    row.sigma = obs.volatility;
    row.mean_return = obs.mean_return;
    row.mean_supply = obs.mean_supply.value_or(kNan);
    row.traded = obs.traded_fraction.value_or(kNan);
    row.h = sol.hamiltonian_value;
  });
  return rows;
}

void write_equilibrium_csv(Run& run, const std::vector<EquilibriumRow>& rows) {
  const auto& m = run.cfg().market;
  std::vector<CsvRow> out;
  for (const auto& r : rows) {
    out.push_back({r.seed, static_cast<std::uint64_t>(m.omega_count), r.cell.n, r.cell.eps, r.cell.eps_var,
                   m.max_supply, r.sigma, r.mean_return, r.mean_supply, r.traded, r.h,
                   static_cast<std::uint64_t>(r.sweeps)});
  }
  run.csv("equilibrium.csv",
          {"seed", "omega", "n", "eps_mean", "eps_var", "s0", "Sigma", "mean_return", "mean_supply",
           "traded_fraction", "H", "sweeps"},
          out);
}

template <class Row, class F>
Moments cell_moments(const std::vector<Row>& rows, std::size_t cell, std::size_t samples, F&& field) {
  std::vector<double> xs;
  for (std::size_t s = 0; s < samples; ++s) xs.push_back(field(rows[cell * samples + s]));
  return moments_of(xs);
}

void experiment_equilibrium(Run& run) {
  const auto cells = grid_cells(run.cfg());
  const auto rows = equilibrium_tasks(run, cells);
  write_equilibrium_csv(run, rows);
  auto summary = run.summary_base();
  summary["cells"] = nlohmann::json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto sig = cell_moments(rows, c, run.cfg().samples, [](const EquilibriumRow& r) { return r.sigma; });
    const auto sb = cell_moments(rows, c, run.cfg().samples, [](const EquilibriumRow& r) { return r.mean_supply; });
    summary["cells"].push_back({{"n", cells[c].n}, {"eps_mean", cells[c].eps}, {"eps_var", cells[c].eps_var},
                                {"Sigma", json_number(sig.mean)}, {"Sigma_err", json_number(sig.stderr_mean)},
                                {"mean_supply", json_number(sb.mean)}, {"mean_supply_err", json_number(sb.stderr_mean)},
                                {"samples", sig.count}});
  }
  run.json("summary.json", summary);
}

void experiment_figure12(Run& run, bool supply) {
  const auto& cfg = run.cfg();
  const auto cells = grid_cells(cfg);
  const auto rows = equilibrium_tasks(run, cells);
  write_equilibrium_csv(run, rows);
  std::vector<CsvRow> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto p = saddle_params(cfg, cells[c], cfg.market.max_supply);
    const auto st = solve_saddle_any(p, saddle_options(cfg));
    double theory = kNan;
    if (st.status == SaddleStatus::Converged) {
      const auto o = saddle_observables(st, p);
      theory = supply ? o.mean_supply : o.volatility;
    }
    const auto sim = cell_moments(rows, c, cfg.samples,
                                  [&](const EquilibriumRow& r) { return supply ? r.mean_supply : r.sigma; });
    out.push_back({cells[c].n, cells[c].eps, theory, sim.mean, sim.stderr_mean});
  }
  if (supply) {
    run.csv("figure2.csv", {"n", "eps", "s_bar_theory", "s_bar_sim", "s_bar_sim_err"}, out);
  } else {
    run.csv("figure1.csv", {"n", "eps", "Sigma_theory", "Sigma_sim", "Sigma_sim_err"}, out);
  }
  run.json("summary.json", run.summary_base());
}

// ---- dynamics ----------------------------------------------------------------

struct DynamicsRow {
  std::uint64_t seed = 0;
  Cell cell;
  std::size_t horizon = 0, burn_in = 0;
  double sigma = kNan, v = kNan, total = kNan, freq = kNan, v_indep = kNan, decomposition_err = kNan;
};

std::vector<DynamicsRow> dynamics_tasks(Run& run, const std::vector<Cell>& cells) {
  const auto& cfg = run.cfg();
  std::vector<DynamicsRow> rows(cells.size() * cfg.samples);
  std::vector<std::optional<DynamicsTrace>> series(cfg.dynamics.record_series ? rows.size() : 0);
  run.run_tasks(cells.size(), cfg.samples, [&](TaskRecord& t) {
    const std::size_t k = t.cell * cfg.samples + t.sample;
    DynamicsRow& row = rows[k];
    row.seed = t.seed;
    row.cell = cells[t.cell];
    const MarketInstance m = generate_market(market_params(cfg, cells[t.cell], t.seed));
    const DynamicsConfig d = dynamics_config(cfg, m, t.seed);
    row.horizon = d.horizon;
    row.burn_in = d.burn_in;
    DynamicsTrace trace = run_dynamics(m, d);
    row.sigma = trace.static_volatility;
    row.v = trace.dynamic_volatility;
    row.total = trace.total_volatility;
    row.freq = trace.mean_supply_frequency();
    row.decomposition_err = trace.decomposition_stderr;
    if (trace.undersampled_states) t.message = std::to_string(trace.undersampled_states) + " undersampled states";
    if (!series.empty()) series[k] = std::move(trace);
  });
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k]) {
      run.binary("series_c" + std::to_string(k / cfg.samples) + "_s" + std::to_string(k % cfg.samples) + ".bin",
                 *series[k]);
    }
  }
  return rows;
}

void write_dynamics_csv(Run& run, const std::vector<DynamicsRow>& rows) {
  const auto& m = run.cfg().market;
  std::vector<CsvRow> out;
  for (const auto& r : rows) {
    out.push_back({r.seed, static_cast<std::uint64_t>(m.omega_count), r.cell.n, r.cell.eps, r.cell.eps_var,
                   m.max_supply, static_cast<std::uint64_t>(r.horizon), static_cast<std::uint64_t>(r.burn_in), r.sigma,
                   r.v, r.total, r.freq});
  }
  run.csv("dynamics.csv",
          {"seed", "omega", "n", "eps_mean", "eps_var", "s0", "T", "burn_in", "Sigma", "V", "total_vol",
           "mean_supply_freq"},
          out);
}

void experiment_dynamics(Run& run) {
  const auto cells = grid_cells(run.cfg());
  const auto rows = dynamics_tasks(run, cells);
  write_dynamics_csv(run, rows);
  auto summary = run.summary_base();
  summary["cells"] = nlohmann::json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::size_t s = run.cfg().samples;
    const auto v = cell_moments(rows, c, s, [](const DynamicsRow& r) { return r.v; });
    const auto sig = cell_moments(rows, c, s, [](const DynamicsRow& r) { return r.sigma; });
    const auto fr = cell_moments(rows, c, s, [](const DynamicsRow& r) { return r.freq; });
    summary["cells"].push_back({{"n", cells[c].n}, {"eps_mean", cells[c].eps}, {"eps_var", cells[c].eps_var},
                                {"V", json_number(v.mean)}, {"V_err", json_number(v.stderr_mean)},
                                {"Sigma", json_number(sig.mean)}, {"mean_supply_freq", json_number(fr.mean)}});
  }
  run.json("summary.json", summary);
}

void experiment_figure3(Run& run) {
  const auto& cfg = run.cfg();
  const auto cells = grid_cells(cfg);
  const auto rows = dynamics_tasks(run, cells);
  write_dynamics_csv(run, rows);
  std::vector<CsvRow> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto p = saddle_params(cfg, cells[c], cfg.market.max_supply);
    const auto st = solve_saddle_any(p, saddle_options(cfg));
    double v_indep = kNan;
    if (st.status == SaddleStatus::Converged) {
      const auto rep = representative_supply(p, st.g, st.chi_ratio);
      const auto m = gauss::clipped_gauss_moments(rep.alpha, rep.beta, p.max_supply);
      v_indep = independent_approx_V_representative(p.complexity, p.max_supply, m.m0, m.m2);
    }
    const std::size_t s = cfg.samples;
    const auto v = cell_moments(rows, c, s, [](const DynamicsRow& r) { return r.v; });
    const auto sig = cell_moments(rows, c, s, [](const DynamicsRow& r) { return r.sigma; });
    const auto tot = cell_moments(rows, c, s, [](const DynamicsRow& r) { return r.total; });
    out.push_back({cells[c].n, cells[c].eps, v.mean, v.stderr_mean, v_indep, sig.mean, tot.mean, tot.stderr_mean});
  }
  run.csv("figure3.csv",
          {"n", "eps", "V_sim", "V_sim_err", "V_indep_theory", "Sigma_sim", "total_sim", "total_sim_err"}, out);
  run.json("summary.json", run.summary_base());
}

// ---- saddle -------------------------------------------------------------------

void experiment_saddle(Run& run) {
  const auto& cfg = run.cfg();
  const auto cells = grid_cells(cfg);
  std::vector<CsvRow> out(cells.size());
  run.run_tasks(cells.size(), 1, [&](TaskRecord& t) {
    const Cell& c = cells[t.cell];
    const auto p = saddle_params(cfg, c, cfg.market.max_supply);
    const auto st = solve_saddle_any(p, saddle_options(cfg));
    SaddleObservables o{kNan, kNan, kNan, kNan, kNan};
    if (st.status == SaddleStatus::Converged) {
      o = saddle_observables(st, p);
    } else {
      t.status = to_string(st.status);
    }
    out[t.cell] = {c.n, c.eps, c.eps_var, p.demand_mean, p.demand_variance(), p.max_supply, st.g,
                   st.status == SaddleStatus::Converged ? st.chi() : kNan, o.volatility, o.mean_return,
                   o.mean_supply, o.traded_probability, std::string(to_string(st.status)), st.residual};
  });
  run.csv("saddle.csv",
          {"n", "eps_mean", "eps_var", "d_mean", "Delta", "s0", "g", "chi", "Sigma", "mean_return", "mean_supply",
           "traded_prob", "status", "residual"},
          out);
  run.json("summary.json", run.summary_base());
}

void experiment_figure67(Run& run, bool supply) {
  const auto& cfg = run.cfg();
  const auto cells = grid_cells(cfg);
  std::vector<CsvRow> out(cells.size());
  run.run_tasks(cells.size(), 1, [&](TaskRecord& t) {
    const Cell& c = cells[t.cell];
    const auto p = saddle_params(cfg, c, cfg.market.max_supply);
    const auto st = solve_saddle_any(p, saddle_options(cfg));
    double value = kNan;
    if (st.status == SaddleStatus::Converged) {
      const auto o = saddle_observables(st, p);
      value = supply ? o.mean_supply : o.volatility;
    } else {
      t.status = to_string(st.status);
    }
    out[t.cell] = {c.n, c.eps, c.eps_var, value, std::string(to_string(st.status))};
  });
  if (supply) {
    run.csv("figure7.csv", {"n", "eps_mean", "eps_var", "mean_supply", "status"}, out);
  } else {
    run.csv("figure6.csv", {"n", "eps_mean", "eps_var", "Sigma", "status"}, out);
  }
  run.json("summary.json", run.summary_base());
}

// ---- pricing -----------------------------------------------------------------

struct PricingRow {
  std::uint64_t seed = 0;
  Cell cell;
  double eps_mean = kNan, eps_var = kNan, sigma = kNan, v = kNan;
  nlohmann::json histogram;
};

std::vector<PricingRow> pricing_tasks(Run& run, const std::vector<Cell>& cells) {
  const auto& cfg = run.cfg();
  std::vector<PricingRow> rows(cells.size() * cfg.samples);
  run.run_tasks(cells.size(), cfg.samples, [&](TaskRecord& t) {
    PricingRow& row = rows[t.cell * cfg.samples + t.sample];
    row.seed = t.seed;
    row.cell = cells[t.cell];
    const MarketInstance m = generate_market(market_params(cfg, cells[t.cell], t.seed));
    const EmmMeasure q = sample_emm(m.omega_count(), t.seed, cfg.pricing.normalize);
    const DynamicsConfig d = dynamics_config(cfg, m, t.seed);
    const PricingResult res = run_pricing_dynamics(m, q, cfg.pricing.bar_u, d, cfg.market.demand_mean);
    const auto stats = effective_epsilons(m, q, cfg.pricing.bar_u, res.trace.state_mean_return);
    row.eps_mean = stats.mean;
    row.eps_var = stats.variance;
    row.sigma = res.trace.static_volatility;
    row.v = res.trace.dynamic_volatility;
    row.histogram = premium_histogram(stats);
  });
  return rows;
}

nlohmann::json pricing_fits(const std::vector<Cell>& cells, const std::vector<PricingRow>& rows, std::size_t samples,
                            std::vector<std::pair<double, Moments>>& eps_by_n,
                            std::vector<std::pair<double, Moments>>& sigma_by_n) {
  for (std::size_t c = 0; c < cells.size(); ++c) {
    eps_by_n.push_back({cells[c].n, cell_moments(rows, c, samples, [](const PricingRow& r) { return r.eps_var; })});
    sigma_by_n.push_back({cells[c].n, cell_moments(rows, c, samples, [](const PricingRow& r) { return r.sigma; })});
  }
  auto fit = [&](const std::vector<std::pair<double, Moments>>& series) -> nlohmann::json {
    std::vector<std::pair<double, double>> pts, large;
    for (const auto& [n, m] : series) {
      if (n > 0.0 && m.mean > 0.0) {
        pts.push_back({n, m.mean});
        if (n >= 4.0) large.push_back({n, m.mean});
      }
    }
    const auto& use = large.size() >= 3 ? large : pts;
    if (use.size() < 3) return nullptr;
    const auto f = scaling_fit(use);
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.stderr_slope}, {"points", use.size()},
            {"n_min", use.front().first}, {"n_max", use.back().first}};
  };
  return {{"eps_eff_var", fit(eps_by_n)}, {"Sigma", fit(sigma_by_n)}};
}

void experiment_pricing(Run& run, int figure) {
  const auto& cfg = run.cfg();
  const auto cells = grid_cells(cfg);
  const auto rows = pricing_tasks(run, cells);
  std::vector<CsvRow> out;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({r.seed, static_cast<std::uint64_t>(cfg.market.omega_count), r.cell.n, cfg.pricing.bar_u, r.eps_mean,
                   r.eps_var, r.sigma, r.v});
    hist.push_back({{"seed", r.seed}, {"n", r.cell.n}, {"histogram", r.histogram}});
  }
  run.csv("pricing.csv", {"seed", "omega", "n", "bar_u", "eps_eff_mean", "eps_eff_var", "Sigma", "V"}, out);
  run.json("pricing_histograms.json", hist);

  std::vector<std::pair<double, Moments>> eps_by_n, sigma_by_n;
  auto summary = run.summary_base();
  summary["scaling"] = pricing_fits(cells, rows, cfg.samples, eps_by_n, sigma_by_n);
  if (figure == 4) {
    std::vector<CsvRow> f;
    for (const auto& [n, m] : eps_by_n) f.push_back({n, m.mean, m.stderr_mean});
    run.csv("figure4.csv", {"n", "eps_eff_var", "eps_eff_var_err"}, f);
  } else if (figure == 5) {
    std::vector<CsvRow> f;
    for (const auto& [n, m] : sigma_by_n) f.push_back({n, m.mean, m.stderr_mean});
    run.csv("figure5.csv", {"n", "Sigma_sim", "Sigma_sim_err"}, f);
  }
  run.json("summary.json", summary);
}

// ---- phase ---------------------------------------------------------------------

void write_phase_csv(Run& run, const PhaseDiagram& diagram) {
  std::vector<CsvRow> out;
  for (const auto& c : diagram.cells) {
    out.push_back({std::string(to_string(c.mode)), c.n, c.eps_mean, c.eps_var, c.status, c.g, c.chi, c.sigma,
                   c.mean_supply});
  }
  run.csv("phase.csv", {"mode", "n", "eps_mean", "eps_var", "status", "g", "chi", "Sigma", "mean_supply"}, out);
}

void write_critical_line(Run& run, const std::vector<double>& z0) {
  std::vector<CsvRow> out;
  for (const auto& p : critical_line(z0)) out.push_back({p.z0, p.ratio, p.n_critical});
  run.csv("critical_line.csv", {"z0", "ratio", "n_critical"}, out);
}

PhaseSweepSpec phase_spec(const ExperimentConfig& cfg) {
  PhaseSweepSpec spec;
  spec.n_grid = cfg.sweep.n;
  spec.eps_grid = cfg.sweep.eps;
  spec.eps_var_grid = cfg.sweep.eps_var;
  spec.mode = cfg.sweep.mode == "unbounded" ? SupplyMode::Unbounded : SupplyMode::Bounded;
  spec.delta = cfg.market.demand_variance;
  spec.demand_mean = cfg.market.demand_mean;
  spec.max_supply = cfg.market.max_supply;
  spec.solver = saddle_options(cfg);
  return spec;
}

PhaseDiagram phase_tasks(Run& run) {
  const auto& cfg = run.cfg();
  const PhaseSweepSpec spec = phase_spec(cfg);
  const auto cells = grid_cells(cfg);
  PhaseDiagram diagram;
  diagram.cells.resize(cells.size());
  run.run_tasks(cells.size(), 1, [&](TaskRecord& t) {
    const Cell& c = cells[t.cell];
    diagram.cells[t.cell] = solve_phase_cell(spec, c.n, c.eps, c.eps_var);
    const auto& status = diagram.cells[t.cell].status;
    if (status != "finite") t.status = status;
    if (status == "error") t.hard_failure = true;
  });
  return diagram;
}

void experiment_phase(Run& run) {
  const auto& cfg = run.cfg();
  write_phase_csv(run, phase_tasks(run));
  if (!cfg.sweep.z0.empty()) write_critical_line(run, cfg.sweep.z0);
  auto summary = run.summary_base();
  if (cfg.sweep.mode == "bounded" && std::isfinite(cfg.market.max_supply)) {
    NstarOptions o;
    o.delta = cfg.market.demand_variance;
    o.demand_mean = cfg.market.demand_mean;
    o.max_supply = cfg.market.max_supply;
    o.premium_variance = cfg.market.premium_variance;
    try {
      const auto r = find_nstar(o);
      summary["n_star"] = {{"value", r.n_star}, {"lower", r.lower}, {"upper", r.upper},
                           {"method", r.method == NstarMethod::Divergence ? "divergence" : "collapse"}};
    } catch (const NoCriticalPoint& e) {
      summary["n_star"] = {{"error", e.what()}};
    }
  }
  run.json("summary.json", summary);
}

void experiment_figure8(Run& run) {
  const auto& cfg = run.cfg();
  write_phase_csv(run, phase_tasks(run));
  write_critical_line(run, cfg.sweep.z0);
  std::vector<CsvRow> out;
  for (double v : cfg.sweep.eps_var) {
    const double sigma = std::sqrt(v);
    for (double e : cfg.sweep.eps) {
      const double nc = (sigma > 0.0 && e > 0.0) ? critical_complexity_for_ratio(e / sigma) : kNan;
      out.push_back({v, e, sigma > 0.0 ? e / sigma : kNan, nc});
    }
  }
  run.csv("figure8_boundary.csv", {"eps_var", "eps_mean", "ratio", "n_critical"}, out);
  run.json("summary.json", run.summary_base());
}

}  // namespace

std::size_t RunManifest::hard_failures() const {
  std::size_t k = 0;
  for (const auto& t : tasks) k += t.hard_failure;
  return k;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json tasks_json = nlohmann::json::array();
  for (const auto& t : tasks) {
    tasks_json.push_back({{"index", t.index},   {"cell", t.cell},     {"sample", t.sample}, {"seed", t.seed},
                          {"status", t.status}, {"message", t.message}, {"hard_failure", t.hard_failure}});
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& a : artifacts) files.push_back({{"path", a.path}, {"bytes", a.bytes}, {"fnv1a64", a.digest}});
  return {{"version", version},
          {"experiment", experiment},
          {"master_seed", master_seed},
          {"seed_derivation", "splitmix64 chain over [master_seed, experiment_id, cell, sample]"},
          {"experiment_id", static_cast<int>(parse_experiment(experiment)) + 1},
          {"config", config},
          {"tasks", tasks_json},
          {"hard_failures", hard_failures()},
          {"artifacts", files},
          {"wall_clock_seconds", wall_clock_seconds}};
}

std::uint64_t task_seed(const ExperimentConfig& cfg, std::size_t cell, std::size_t sample) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(cfg.experiment) + 1, static_cast<std::uint64_t>(cell),
                                static_cast<std::uint64_t>(sample)});
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError(cfg.output_dir, ec.message());

  Run run(cfg);
  switch (cfg.experiment) {
    case Experiment::Equilibrium: experiment_equilibrium(run); break;
    case Experiment::Dynamics: experiment_dynamics(run); break;
    case Experiment::Saddle: experiment_saddle(run); break;
    case Experiment::Pricing: experiment_pricing(run, 0); break;
    case Experiment::Phase: experiment_phase(run); break;
    case Experiment::Figure1: experiment_figure12(run, false); break;
    case Experiment::Figure2: experiment_figure12(run, true); break;
    case Experiment::Figure3: experiment_figure3(run); break;
    case Experiment::Figure4: experiment_pricing(run, 4); break;
    case Experiment::Figure5: experiment_pricing(run, 5); break;
    case Experiment::Figure6: experiment_figure67(run, false); break;
    case Experiment::Figure7: experiment_figure67(run, true); break;
    case Experiment::Figure8: experiment_figure8(run); break;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run.finish(seconds);
}

}  // namespace mlab
