#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlab/market.hpp"

namespace mlab {

inline constexpr const char* kVersion = "mlab 0.1.0";

/// Raised for config documents that fail to parse or validate.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class Experiment {
  Equilibrium,
  Dynamics,
  Saddle,
  Pricing,
  Phase,
  Figure1,
  Figure2,
  Figure3,
  Figure4,
  Figure5,
  Figure6,
  Figure7,
  Figure8,
};

const char* to_string(Experiment e);
Experiment parse_experiment(const std::string& name);
bool is_experiment_name(const std::string& name);

struct SolverSection {
  double tol = 1e-10;       // saddle-point residual
  double kkt_tol = 0.0;     // equilibrium KKT; <= 0 selects 1e-10 / omega
  std::size_t max_sweeps = 100000;
  std::size_t max_iterations = 5000;
  double damping = 0.5;
  bool randomized_order = false;
};

struct DynamicsSection {
  std::size_t burn_in = 0;  // periods; 0 selects 100 omega (or the relaxation time if stationary)
  std::size_t window = 0;   // periods; 0 selects 900 omega
  bool stationary = false;
  bool record_series = false;
};

struct SweepSection {
  std::vector<double> n;
  std::vector<double> eps;
  std::vector<double> eps_var;
  std::vector<double> z0;
  std::string mode = "bounded";
};

struct PricingSection {
  double bar_u = 0.0;
  bool normalize = true;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Saddle;
  MarketParams market;
  SolverSection solver;
  DynamicsSection dynamics;
  SweepSection sweep;
  PricingSection pricing;
  std::size_t samples = 20;
  std::string output_dir = "out";
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  /// Every key with its resolved value, sorted; echoed into outputs.
  std::map<std::string, std::string> snapshot;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Splits `section.key = value` lines. '#' starts a comment.
KeyValues parse_key_values(const std::string& text);

/// Preset keys for figure experiments; empty for the others.
KeyValues figure_preset(Experiment e);

/// Layers preset, document and overrides (later wins), rejects unknown keys
/// and type errors with the key path, fills defaults and validates.
ExperimentConfig build_config(const KeyValues& document, const KeyValues& overrides = {},
                              const std::string& experiment_override = "");

ExperimentConfig parse_config(const std::string& text);

/// Parses `[a, b]`, `linspace(a, b, k)`, `logspace(a, b, k)`, `range(a, b, step)`
/// or a bare number.
std::vector<double> parse_grid(const std::string& key, const std::string& value);

}  // namespace mlab
