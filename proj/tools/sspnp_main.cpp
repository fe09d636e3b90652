#include <CLI11.hpp>

#include <iostream>

#include "sspnp/cli/commands.hpp"
#include "sspnp/errors.hpp"

int main(int argc, char** argv) {
  using sspnp::cli::Command;

  CLI::App app{"Steady Poisson-Nernst-Planck channel solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool svg = false;
  unsigned threads = 1;
  double tol = 0.0;

  const std::vector<std::pair<Command, std::string>> commands = {
      {Command::Solve, "Solve one boundary-value problem and write the profile"},
      {Command::Sweep, "Sweep V or c_B up and down, recording branch jumps"},
      {Command::Trace, "Trace the I-V or I-c_B curve by continuation in I"},
      {Command::TurningPoints, "Trace, then locate every fold and the multiplicity map"},
      {Command::PhaseDiagram, "Classify curve shapes over a (sigma, kappa) grid"},
  };
  std::vector<std::pair<Command, CLI::App*>> subs;
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(sspnp::cli::command_name(command), help);
    sub->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [output] directory)");
    sub->add_flag("--svg", svg, "Also write SVG plots");
    sub->add_option("--threads", threads, "Worker threads for phase-diagram cells")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "Absolute residual tolerance")->check(CLI::PositiveNumber);
    subs.emplace_back(command, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Command command = Command::Solve;
    sspnp::cli::RunOptions options;
    for (const auto& [c, sub] : subs) {
      if (sub->parsed()) {
        command = c;
        if (sub->count("--out")) options.out_dir = out_dir;
        if (sub->count("--tol")) options.abs_tol = tol;
      }
    }
    options.svg = svg;
    options.threads = threads;
    const auto config = sspnp::cli::load_config(config_path, command);
    const auto files = sspnp::cli::run(config, options, std::cout);
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sspnp::cli::exit_code(e);
  }
}
