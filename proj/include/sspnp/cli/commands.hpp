#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "sspnp/cli/config.hpp"

namespace sspnp::cli {

/// Command-line overrides on top of the config file.
struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  bool svg = false;
  unsigned threads = 1;
  std::optional<double> abs_tol;
};

/// Runs the configured command, writes its CSV (and SVG) files, and prints a
/// short human-readable summary to `log`. Returns the files written.
std::vector<std::filesystem::path> run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

/// 0 success, 2 ConfigError, 3 NonConvergence, 4 MeshBudgetExceeded, 1 other.
int exit_code(const std::exception& error);

}  // namespace sspnp::cli
