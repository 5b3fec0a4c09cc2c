#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlab/config.hpp"
#include "mlab/experiment.hpp"
#include "mlab/output.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kTaskFailure = 2, kIo = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mlab::IoError(path, "cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting-market numerical lab"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::vector<std::string> sets;
  app.add_option("command", command, "experiment name, or 'run' to take it from the config")->required();
  app.add_option("--config", config_path, "config file (default: $MLAB_CONFIG)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", sets, "key=value override (repeatable)");
  app.set_version_flag("--version", mlab::kVersion);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("MLAB_CONFIG")) config_path = env;
    }
    mlab::KeyValues document;
    if (!config_path.empty()) document = mlab::parse_key_values(read_file(config_path));

    mlab::KeyValues overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw mlab::ConfigError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (*seed_opt) overrides.emplace_back("seed", std::to_string(seed));
    if (workers) overrides.emplace_back("workers", std::to_string(workers));
    if (!out_dir.empty()) overrides.emplace_back("output_dir", out_dir);

    if (command != "run" && !mlab::is_experiment_name(command)) {
      throw mlab::ConfigError("unknown experiment '" + command + "'");
    }
    const auto cfg = mlab::build_config(document, overrides, command == "run" ? "" : command);
    const auto manifest = mlab::run_experiment(cfg);

    std::printf("%s: %zu tasks, %zu artifacts in %s (%.2f s)\n", manifest.experiment.c_str(), manifest.tasks.size(),
                manifest.artifacts.size(), cfg.output_dir.c_str(), manifest.wall_clock_seconds);
    if (manifest.hard_failures() > 0) {
      std::fprintf(stderr, "%zu task(s) failed; see manifest.json\n", manifest.hard_failures());
      return kTaskFailure;
    }
    return kOk;
  } catch (const mlab::IoError& e) {
    std::fprintf(stderr, "mlab: I/O error: %s\n", e.what());
    return kIo;
  } catch (const mlab::ValidationError& e) {
    std::fprintf(stderr, "mlab: %s\n", e.what());
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "mlab: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mlab: %s\n", e.what());
    return kTaskFailure;
  }
}
