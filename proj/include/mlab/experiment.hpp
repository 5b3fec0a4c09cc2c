#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlab/config.hpp"

namespace mlab {

struct TaskRecord {
  std::size_t index = 0;
  std::size_t cell = 0;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok, stalled, nonconvergence, critical, divergent, error
  std::string message;
  bool hard_failure = false;
};

struct Artifact {
  std::string path;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string digest;
};

struct RunManifest {
  std::string version = kVersion;
  std::string experiment;
  std::uint64_t master_seed = 0;
  nlohmann::json config;
  std::vector<TaskRecord> tasks;
  std::vector<Artifact> artifacts;
  double wall_clock_seconds = 0.0;

  std::size_t hard_failures() const;
  nlohmann::json to_json() const;
};

/// Per-task seed: derive_seed(master, {experiment id, cell, sample}).
std::uint64_t task_seed(const ExperimentConfig& cfg, std::size_t cell, std::size_t sample);

/// Runs the experiment, writes its artifacts and manifest.json into
/// cfg.output_dir. Throws IoError on file-system failures.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace mlab
