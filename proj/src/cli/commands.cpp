#include "sspnp/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>

#include "sspnp/cli/output.hpp"
#include "sspnp/errors.hpp"
#include "sspnp/model/ode.hpp"
#include "sspnp/model/scales.hpp"

namespace sspnp::cli {

namespace {

using continuation::Branch;

class Writer {
 public:
  Writer(std::filesystem::path dir, std::string prefix) : dir_(std::move(dir)), prefix_(std::move(prefix)) {
    std::filesystem::create_directories(dir_);
  }

  void file(const std::string& suffix, const std::function<void(std::ostream&)>& body) {
    const auto path = dir_ / (prefix_ + suffix);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    body(out);
    if (!out) throw Error("write failed: " + path.string());
    written_.push_back(path);
  }

  std::vector<std::filesystem::path> written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::string prefix_;
  std::vector<std::filesystem::path> written_;
};

std::string fixed(double v, const char* format = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct Context {
  const ExperimentConfig& cfg;
  bvp::SolverSettings solver;
  bool svg;
  unsigned threads;
  Writer& writer;
  std::ostream& log;

  std::string voltage(double v) const {
    return fixed(v) + " (" + fixed(v * model::thermal_voltage(cfg.temperature) * 1e3, "%.4g") + " mV)";
  }
};

Series curve_series(const Branch& b, const std::string& label) {
  Series s{label, {}, {}};
  for (const auto& p : b.points) {
    s.x.push_back(continuation::response(p));
    s.y.push_back(p.I);
  }
  return s;
}

std::string response_label(const Branch& b) {
  return !b.points.empty() && b.points.front().c_b ? "c_B" : "V (thermal units)";
}

void run_solve(const Context& ctx) {
  const auto& sys = ctx.cfg.system;
  const auto sol = continuation::sigma_ramp(sys, ctx.cfg.formulation, ctx.solver);
  const auto yb = sol.right();
  const double v = yb[model::state::kPotential];
  const double current = model::total_current(yb, sys.valences());
  ctx.writer.file("_profile.csv", [&](std::ostream& out) { write_profile_csv(out, sys, sol); });
  if (ctx.svg) {
    Plot phi{"potential", "x", "phi", {}, {}};
    Plot conc{"concentrations", "x", "c", {}, {}};
    Series p{"phi", {}, {}};
    std::vector<Series> c(sys.species_count());
    for (std::size_t i = 0; i < c.size(); ++i) c[i].label = "c_" + std::to_string(i + 1);
    for (std::size_t k = 0; k < sol.mesh.size(); ++k) {
      const auto y = sol.node(k);
      p.x.push_back(sol.mesh[k]);
      p.y.push_back(y[model::state::kPotential]);
      for (std::size_t i = 0; i < c.size(); ++i) {
        c[i].x.push_back(sol.mesh[k]);
        c[i].y.push_back(y[model::state::concentration(i)]);
      }
    }
    phi.series.push_back(std::move(p));
    conc.series = std::move(c);
    ctx.writer.file("_phi.svg", [&](std::ostream& out) { write_svg(out, phi); });
    ctx.writer.file("_concentrations.svg", [&](std::ostream& out) { write_svg(out, conc); });
  }
  ctx.log << model::formulation_name(ctx.cfg.formulation) << ": V = " << ctx.voltage(v) << "  I = " << fixed(current)
          << "  residual = " << fixed(sol.residual_norm, "%.3e") << "  mesh = " << sol.mesh.size() << '\n';
}

void run_sweep(const Context& ctx) {
  std::vector<continuation::SweepSpec> specs{ctx.cfg.sweep};
  if (ctx.cfg.both_directions) {
    auto back = ctx.cfg.sweep;
    std::swap(back.start, back.end);
    specs.push_back(back);
  }
  Plot plot{"sweep", "", "I", {}, {}};
  for (const auto& spec : specs) {
    const auto steps = ctx.cfg.steps.apply(continuation::default_sweep_steps(spec));
    const Branch b = continuation::sweep(ctx.cfg.system, spec, steps, ctx.solver);
    const std::string dir = spec.end > spec.start ? "up" : "down";
    ctx.writer.file("_" + dir + ".csv", [&](std::ostream& out) { write_curve_csv(out, b); });
    plot.x_label = response_label(b);
    plot.series.push_back(curve_series(b, dir));
    ctx.log << "sweep " << dir << ": " << b.points.size() << " points, " << b.jump_events.size() << " jump(s)\n";
    for (const auto& j : b.jump_events) {
      ctx.log << "  jump at " << b.parameter_name << " = "
              << (spec.parameter == continuation::SweepParameter::Voltage ? ctx.voltage(j.parameter) : fixed(j.parameter))
              << ": I " << fixed(j.from_current) << " -> " << fixed(j.to_current) << '\n';
    }
  }
  if (ctx.svg) ctx.writer.file("_sweep.svg", [&](std::ostream& out) { write_svg(out, plot); });
}

Branch run_trace_only(const Context& ctx) {
  const auto steps = ctx.cfg.steps.apply(continuation::default_trace_steps(ctx.cfg.trace));
  Branch b = continuation::trace_curve(ctx.cfg.system, ctx.cfg.trace, steps, ctx.solver);
  ctx.writer.file("_trace.csv", [&](std::ostream& out) { write_curve_csv(out, b); });
  ctx.log << "trace: " << b.points.size() << " points, I in [" << fixed(b.points.front().I) << ", "
          << fixed(b.points.back().I) << "]";
  if (b.points.size() >= 5) ctx.log << ", shape " << continuation::classify_shape(b).name();
  ctx.log << '\n';
  return b;
}

void run_trace(const Context& ctx) {
  const Branch b = run_trace_only(ctx);
  if (ctx.svg) {
    Plot plot{"trace", response_label(b), "I", {curve_series(b, "trace")}, {}};
    ctx.writer.file("_trace.svg", [&](std::ostream& out) { write_svg(out, plot); });
  }
}

void run_turning_points(const Context& ctx) {
  const Branch b = run_trace_only(ctx);
  const auto report = turning::find_all_turning_points(ctx.cfg.system, b, ctx.solver);
  ctx.writer.file("_folds.csv", [&](std::ostream& out) { write_folds_csv(out, report.folds); });
  for (const auto& w : report.warnings) ctx.log << "warning: " << w << '\n';
  for (const auto& f : report.folds) {
    ctx.log << (f.kind == turning::FoldKind::Maximum ? "fold (max V): " : "fold (min V): ") << "V* = " << ctx.voltage(f.V_star)
            << "  I* = " << fixed(f.I_star) << '\n';
  }
  if (ctx.svg) {
    Plot plot{"turning points", response_label(b), "I", {curve_series(b, "trace")}, {}};
    for (const auto& f : report.folds) plot.markers.emplace_back(f.V_star, f.I_star);
    ctx.writer.file("_folds.svg", [&](std::ostream& out) { write_svg(out, plot); });
  }
  const auto map = turning::multiplicity_intervals(report.folds, &b);
  ctx.writer.file("_multiplicity.csv", [&](std::ostream& out) { write_multiplicity_csv(out, map); });
  for (const auto& i : map.intervals) {
    ctx.log << "  V in (" << fixed(i.v_low) << ", " << fixed(i.v_high) << "): " << i.count << " solution(s)";
    if (i.trace_count && *i.trace_count != i.count) ctx.log << " [trace crosses " << *i.trace_count << " times]";
    ctx.log << '\n';
  }
}

void run_phase_diagram(const Context& ctx) {
  const auto steps = ctx.cfg.steps.apply(continuation::default_trace_steps(ctx.cfg.trace));
  const auto cells = continuation::phase_diagram(ctx.cfg.system, ctx.cfg.sigmas, ctx.cfg.kappas, ctx.cfg.trace, steps,
                                                 ctx.solver, ctx.threads);
  ctx.writer.file("_phase.csv", [&](std::ostream& out) { write_phase_csv(out, cells); });
  for (const auto& c : cells) {
    ctx.log << "sigma = " << fixed(c.sigma) << "  kappa = " << fixed(c.kappa) << ": "
            << (c.shape ? c.shape->name() : "failed (" + c.failure + ")") << '\n';
  }
}

}  // namespace

std::vector<std::filesystem::path> run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  bvp::SolverSettings solver = config.solver;
  if (options.abs_tol) {
    solver.abs_tol = *options.abs_tol;
    try {
      solver.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("--tol: ") + e.what());
    }
  }
  Writer writer(options.out_dir.value_or(config.directory), config.prefix);
  const Context ctx{config, solver, options.svg || config.svg, std::max(1u, options.threads), writer, log};
  switch (config.command) {
    case Command::Solve:
      run_solve(ctx);
      break;
    case Command::Sweep:
      run_sweep(ctx);
      break;
    case Command::Trace:
      run_trace(ctx);
      break;
    case Command::TurningPoints:
      run_turning_points(ctx);
      break;
    case Command::PhaseDiagram:
      run_phase_diagram(ctx);
      break;
  }
  return writer.written();
}

int exit_code(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return 2;
  if (dynamic_cast<const NonConvergence*>(&error)) return 3;
  if (dynamic_cast<const MeshBudgetExceeded*>(&error)) return 4;
  return 1;
}

}  // namespace sspnp::cli
