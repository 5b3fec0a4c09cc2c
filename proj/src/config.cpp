#include "mlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace mlab {

namespace {

struct ExperimentName {
  Experiment id;
  const char* name;
};

constexpr ExperimentName kExperiments[] = {
    {Experiment::Equilibrium, "equilibrium"}, {Experiment::Dynamics, "dynamics"},
    {Experiment::Saddle, "saddle"},           {Experiment::Pricing, "pricing"},
    {Experiment::Phase, "phase"},             {Experiment::Figure1, "figure1"},
    {Experiment::Figure2, "figure2"},         {Experiment::Figure3, "figure3"},
    {Experiment::Figure4, "figure4"},         {Experiment::Figure5, "figure5"},
    {Experiment::Figure6, "figure6"},         {Experiment::Figure7, "figure7"},
    {Experiment::Figure8, "figure8"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void type_error(const std::string& key, const std::string& expected, const std::string& value) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = lower(trim(raw));
  if (v == "inf" || v == "+inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  if (v == "-inf" || v == "-infinity") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const char* first = v.data();
  if (!v.empty() && v[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || std::isnan(out)) type_error(key, "number", raw);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) type_error(key, "nonnegative integer", raw);
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = lower(trim(raw));
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  type_error(key, "boolean", raw);
}

std::string unquote(const std::string& raw) {
  std::string v = trim(raw);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

std::vector<std::string> split_args(const std::string& body) {
  std::vector<std::string> parts;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_grid(const std::vector<double>& g) {
  std::string out = "[";
  for (std::size_t i = 0; i < g.size(); ++i) out += (i ? ", " : "") + format_value(g[i]);
  return out + "]";
}

}  // namespace

const char* to_string(Experiment e) {
  for (const auto& x : kExperiments) {
    if (x.id == e) return x.name;
  }
  return "unknown";
}

bool is_experiment_name(const std::string& name) {
  return std::any_of(std::begin(kExperiments), std::end(kExperiments),
                     [&](const ExperimentName& x) { return name == x.name; });
}

Experiment parse_experiment(const std::string& name) {
  for (const auto& x : kExperiments) {
    if (name == x.name) return x.id;
  }
  throw ConfigError("experiment: unknown experiment '" + name + "'");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::vector<double> parse_grid(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) type_error(key, "list", raw);
  if (v.front() == '[') {
    if (v.back() != ']') type_error(key, "list '[a, b, ...]'", raw);
    std::vector<double> out;
    for (const auto& part : split_args(v.substr(1, v.size() - 2))) out.push_back(to_double(key, part));
    return out;
  }
  const auto open = v.find('(');
  if (open != std::string::npos) {
    if (v.back() != ')') type_error(key, "range expression", raw);
    const std::string fn = lower(trim(v.substr(0, open)));
    const auto args = split_args(v.substr(open + 1, v.size() - open - 2));
    if (args.size() != 3) type_error(key, fn + "(a, b, c)", raw);
    const double a = to_double(key, args[0]);
    const double b = to_double(key, args[1]);
    std::vector<double> out;
    if (fn == "linspace" || fn == "logspace") {
      const std::uint64_t k = to_u64(key, args[2]);
      if (k == 0) type_error(key, "point count >= 1", args[2]);
      if (fn == "logspace" && !(a > 0.0 && b > 0.0)) type_error(key, "positive logspace endpoints", raw);
      for (std::uint64_t j = 0; j < k; ++j) {
        const double t = k == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(k - 1);
        out.push_back(fn == "linspace" ? a + (b - a) * t : std::exp(std::log(a) + (std::log(b) - std::log(a)) * t));
      }
      out.back() = k == 1 ? a : b;
      return out;
    }
    if (fn == "range") {
      const double step = to_double(key, args[2]);
      if (!(step > 0.0)) type_error(key, "positive range step", args[2]);
      const double count = std::floor((b - a) / step + 1e-9);
      if (count < 0.0 || count > 1e7) type_error(key, "range with start <= stop", raw);
      for (std::size_t j = 0; j <= static_cast<std::size_t>(count); ++j) out.push_back(a + step * static_cast<double>(j));
      return out;
    }
    type_error(key, "linspace, logspace or range", raw);
  }
  return {to_double(key, v)};
}

KeyValues figure_preset(Experiment e) {
  // Grids and sample counts are not stated in the paper; these are choices.
  const KeyValues fig12 = {{"market.omega_count", "64"}, {"market.max_supply", "1"},
                           {"sweep.n", "logspace(0.1, 10, 13)"}, {"sweep.eps", "[0.01, 0.1, 0.3]"},
                           {"samples", "20"}};
  switch (e) {
    case Experiment::Figure1:
    case Experiment::Figure2: return fig12;
    case Experiment::Figure3:
      return {{"market.omega_count", "64"}, {"market.max_supply", "1"}, {"sweep.n", "[1, 10]"},
              {"sweep.eps", "[0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5]"}, {"samples", "10"}};
    case Experiment::Figure4:
    case Experiment::Figure5:
      return {{"market.omega_count", "64"}, {"market.max_supply", "1"}, {"sweep.n", "[1, 2, 4, 6, 8, 12, 16]"},
              {"samples", "8"}};
    case Experiment::Figure6:
      return {{"market.max_supply", "1"}, {"sweep.n", "logspace(0.1, 100, 41)"}, {"sweep.eps", "[0.1]"},
              {"sweep.eps_var", "[20, 10, 1, 0.01]"}};
    case Experiment::Figure7:
      return {{"market.max_supply", "1"}, {"sweep.n", "logspace(0.1, 20, 41)"},
              {"sweep.eps", "[-0.1, -0.01, 0.01, 0.1, 0.3]"}, {"sweep.eps_var", "[0.01]"}};
    case Experiment::Figure8:
      return {{"market.max_supply", "inf"}, {"sweep.mode", "unbounded"}, {"sweep.z0", "linspace(0.02, 2.5, 63)"},
              {"sweep.n", "linspace(0.5, 10, 39)"}, {"sweep.eps", "linspace(0.05, 1, 20)"},
              {"sweep.eps_var", "[0.25, 1, 4]"}};
    default: return {};
  }
}

ExperimentConfig build_config(const KeyValues& document, const KeyValues& overrides,
                              const std::string& experiment_override) {
  std::string experiment_name = experiment_override;
  if (experiment_name.empty()) {
    for (const auto* layer : {&document, &overrides}) {
      for (const auto& [k, v] : *layer) {
        if (k == "experiment") experiment_name = unquote(v);
      }
    }
  }
  if (experiment_name.empty()) throw ConfigError("experiment: missing");

  ExperimentConfig cfg;
  cfg.experiment = parse_experiment(experiment_name);

  std::map<std::string, std::string> merged;
  for (const auto& [k, v] : figure_preset(cfg.experiment)) merged[k] = v;
  for (const auto* layer : {&document, &overrides}) {
    for (const auto& [k, v] : *layer) merged[k] = v;
  }
  merged["experiment"] = experiment_name;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](double& dst) -> Setter { return [&dst](const std::string& k, const std::string& v) { dst = to_double(k, v); }; };
  auto count = [](std::size_t& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = static_cast<std::size_t>(to_u64(k, v)); };
  };
  auto flag = [](bool& dst) -> Setter { return [&dst](const std::string& k, const std::string& v) { dst = to_bool(k, v); }; };
  auto grid = [](std::vector<double>& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_grid(k, v); };
  };
  auto text = [](std::string& dst) -> Setter { return [&dst](const std::string&, const std::string& v) { dst = unquote(v); }; };

  bool has_n = false, has_eps = false, has_var = false;
  const std::map<std::string, Setter> keys = {
      {"experiment", [](const std::string&, const std::string&) {}},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = to_u64(k, v); }},
      {"samples", count(cfg.samples)},
      {"workers", count(cfg.workers)},
      {"output_dir", text(cfg.output_dir)},
      {"market.omega_count", count(cfg.market.omega_count)},
      {"market.complexity", num(cfg.market.complexity)},
      {"market.demand_mean", num(cfg.market.demand_mean)},
      {"market.demand_variance", num(cfg.market.demand_variance)},
      {"market.premium_mean", num(cfg.market.premium_mean)},
      {"market.premium_variance", num(cfg.market.premium_variance)},
      {"market.max_supply", num(cfg.market.max_supply)},
      {"solver.tol", num(cfg.solver.tol)},
      {"solver.kkt_tol", num(cfg.solver.kkt_tol)},
      {"solver.max_sweeps", count(cfg.solver.max_sweeps)},
      {"solver.max_iterations", count(cfg.solver.max_iterations)},
      {"solver.damping", num(cfg.solver.damping)},
      {"solver.randomized_order", flag(cfg.solver.randomized_order)},
      {"dynamics.burn_in", count(cfg.dynamics.burn_in)},
      {"dynamics.window", count(cfg.dynamics.window)},
      {"dynamics.stationary", flag(cfg.dynamics.stationary)},
      {"dynamics.record_series", flag(cfg.dynamics.record_series)},
      {"sweep.n", [&](const std::string& k, const std::string& v) { cfg.sweep.n = parse_grid(k, v); has_n = true; }},
      {"sweep.eps", [&](const std::string& k, const std::string& v) { cfg.sweep.eps = parse_grid(k, v); has_eps = true; }},
      {"sweep.eps_var",
       [&](const std::string& k, const std::string& v) { cfg.sweep.eps_var = parse_grid(k, v); has_var = true; }},
      {"sweep.z0", grid(cfg.sweep.z0)},
      {"sweep.mode", text(cfg.sweep.mode)},
      {"pricing.bar_u", num(cfg.pricing.bar_u)},
      {"pricing.normalize", flag(cfg.pricing.normalize)},
  };

  for (const auto& [k, v] : merged) {
    const auto it = keys.find(k);
    if (it == keys.end()) throw ConfigError("unknown key '" + k + "'");
    it->second(k, v);
  }
  if (!has_n) cfg.sweep.n = {cfg.market.complexity};
  if (!has_eps) cfg.sweep.eps = {cfg.market.premium_mean};
  if (!has_var) cfg.sweep.eps_var = {cfg.market.premium_variance};

  // Validation, naming the offending key.
  if (cfg.samples == 0) throw ConfigError("samples: must be >= 1");
  if (cfg.workers == 0) throw ConfigError("workers: must be >= 1");
  if (cfg.market.omega_count == 0) throw ConfigError("market.omega_count: must be >= 1");
  if (!(cfg.market.demand_variance >= 0.0) || std::isinf(cfg.market.demand_variance)) {
    throw ConfigError("market.demand_variance: must be finite and >= 0");
  }
  if (!(cfg.market.premium_variance >= 0.0) || std::isinf(cfg.market.premium_variance)) {
    throw ConfigError("market.premium_variance: must be finite and >= 0");
  }
  if (!(cfg.market.max_supply > 0.0)) throw ConfigError("market.max_supply: must be > 0");
  if (!(cfg.solver.tol > 0.0)) throw ConfigError("solver.tol: must be > 0");
  if (!(cfg.solver.damping > 0.0 && cfg.solver.damping <= 1.0)) throw ConfigError("solver.damping: must be in (0, 1]");
  if (cfg.sweep.mode != "bounded" && cfg.sweep.mode != "unbounded") {
    throw ConfigError("sweep.mode: expected 'bounded' or 'unbounded', got '" + cfg.sweep.mode + "'");
  }
  if (cfg.sweep.n.empty()) throw ConfigError("sweep.n: grid must be nonempty");
  if (cfg.sweep.eps.empty()) throw ConfigError("sweep.eps: grid must be nonempty");
  if (cfg.sweep.eps_var.empty()) throw ConfigError("sweep.eps_var: grid must be nonempty");
  for (double n : cfg.sweep.n) {
    if (!(n >= 0.0) || std::isinf(n)) throw ConfigError("sweep.n: values must be finite and >= 0");
  }
  for (double v : cfg.sweep.eps_var) {
    if (!(v >= 0.0) || std::isinf(v)) throw ConfigError("sweep.eps_var: values must be finite and >= 0");
  }
  for (double z : cfg.sweep.z0) {
    if (!(z > 0.0) || std::isinf(z)) throw ConfigError("sweep.z0: values must be positive and finite");
  }

  cfg.snapshot = merged;
  cfg.snapshot["sweep.n"] = format_grid(cfg.sweep.n);
  cfg.snapshot["sweep.eps"] = format_grid(cfg.sweep.eps);
  cfg.snapshot["sweep.eps_var"] = format_grid(cfg.sweep.eps_var);
  for (const auto& [k, setter] : keys) {
    (void)setter;
    if (!cfg.snapshot.count(k)) cfg.snapshot[k] = "";
  }
  auto fill = [&](const std::string& k, const std::string& v) {
    if (cfg.snapshot[k].empty()) cfg.snapshot[k] = v;
  };
  fill("seed", std::to_string(cfg.seed));
  fill("samples", std::to_string(cfg.samples));
  fill("workers", std::to_string(cfg.workers));
  fill("output_dir", cfg.output_dir);
  fill("market.omega_count", std::to_string(cfg.market.omega_count));
  fill("market.complexity", format_value(cfg.market.complexity));
  fill("market.demand_mean", format_value(cfg.market.demand_mean));
  fill("market.demand_variance", format_value(cfg.market.demand_variance));
  fill("market.premium_mean", format_value(cfg.market.premium_mean));
  fill("market.premium_variance", format_value(cfg.market.premium_variance));
  fill("market.max_supply", format_value(cfg.market.max_supply));
  fill("solver.tol", format_value(cfg.solver.tol));
  fill("solver.kkt_tol", format_value(cfg.solver.kkt_tol));
  fill("solver.max_sweeps", std::to_string(cfg.solver.max_sweeps));
  fill("solver.max_iterations", std::to_string(cfg.solver.max_iterations));
  fill("solver.damping", format_value(cfg.solver.damping));
  fill("solver.randomized_order", cfg.solver.randomized_order ? "true" : "false");
  fill("dynamics.burn_in", std::to_string(cfg.dynamics.burn_in));
  fill("dynamics.window", std::to_string(cfg.dynamics.window));
  fill("dynamics.stationary", cfg.dynamics.stationary ? "true" : "false");
  fill("dynamics.record_series", cfg.dynamics.record_series ? "true" : "false");
  fill("sweep.z0", format_grid(cfg.sweep.z0));
  fill("sweep.mode", cfg.sweep.mode);
  fill("pricing.bar_u", format_value(cfg.pricing.bar_u));
  fill("pricing.normalize", cfg.pricing.normalize ? "true" : "false");
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) { return build_config(parse_key_values(text)); }

}  // namespace mlab
