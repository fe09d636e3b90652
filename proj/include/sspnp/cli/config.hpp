#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "sspnp/bvp/bvp_spec.hpp"
#include "sspnp/continuation/continuation.hpp"
#include "sspnp/model/channel_system.hpp"
#include "sspnp/model/formulation.hpp"

namespace sspnp::cli {

enum class Command { Solve, Sweep, Trace, TurningPoints, PhaseDiagram };

std::string command_name(Command command);

/// Partial override of the continuation step defaults. Unset fields keep the
/// range-scaled defaults of the sweep or trace.
struct StepOverrides {
  std::optional<double> initial_step;
  std::optional<double> min_step;
  std::optional<double> max_step;
  std::optional<double> growth;

  continuation::StepSettings apply(continuation::StepSettings base) const;
};

struct ExperimentConfig {
  model::ChannelSystem system;
  double temperature = 300.0;  // K; only used for mV in summaries

  Command command = Command::Solve;
  model::Formulation formulation = model::VoltageToCurrent{};  // solve
  continuation::SweepSpec sweep;                               // sweep
  bool both_directions = true;                                 // sweep
  continuation::TraceSpec trace;  // trace, turning-points, phase-diagram
  std::vector<double> sigmas;     // phase-diagram
  std::vector<double> kappas;     // phase-diagram

  bvp::SolverSettings solver;
  StepOverrides steps;

  std::string prefix = "run";
  std::filesystem::path directory = ".";
  bool svg = false;
};

/// Parses the line-oriented config format documented in the README. Errors
/// are thrown as ConfigError prefixed with "source:line:".
ExperimentConfig parse_config(std::istream& in, const std::string& source, Command command);

ExperimentConfig load_config(const std::filesystem::path& path, Command command);

}  // namespace sspnp::cli
