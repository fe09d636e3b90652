#include "sspnp/continuation/continuation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "sspnp/bvp/solve.hpp"
#include "sspnp/errors.hpp"
#include "sspnp/model/ode.hpp"

namespace sspnp::continuation {

namespace {

using model::ChannelSystem;
using model::Formulation;

bool has_negative_concentration(const ChannelSystem& system, const Solution& sol) {
  for (std::size_t i = 0; i < system.species_count(); ++i) {
    if (sol.values.row(model::state::concentration(i)).minCoeff() <= 0.0) return true;
  }
  return false;
}

std::optional<std::size_t> concentration_species(const Formulation& f) {
  if (const auto* c = std::get_if<model::ConcentrationToCurrent>(&f)) return c->first;
  if (const auto* c = std::get_if<model::CurrentToConcentration>(&f)) return c->first;
  return std::nullopt;
}

CurvePoint make_point(const ChannelSystem& system, const Formulation& f, Solution sol, double parameter,
                      StepMeta meta) {
  CurvePoint p;
  p.parameter = parameter;
  const Eigen::VectorXd yb = sol.right();
  p.V = yb[model::state::kPotential];
  p.I = model::total_current(yb, system.valences());
  if (const auto species = concentration_species(f)) p.c_b = yb[model::state::concentration(*species)];
  meta.newton_iterations = sol.newton_iterations;
  p.step_meta = meta;
  p.solution = std::make_shared<const Solution>(std::move(sol));
  return p;
}

/// Node values of `prev` extrapolated along the secant through `older`.
Eigen::MatrixXd secant_guess(const Solution& prev, const Solution& older, double ratio) {
  Eigen::MatrixXd out = prev.values;
  for (std::size_t k = 0; k < prev.mesh.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    out.col(j) += ratio * (prev.values.col(j) - bvp::evaluate(older, prev.mesh[k]));
  }
  return out;
}

/// Consecutive-fast-solve bookkeeping for step growth.
struct StepController {
  const StepSettings& steps;
  double step;
  int streak = 0;

  explicit StepController(const StepSettings& s) : steps(s), step(s.initial_step) {}

  void success(int newton_iterations) {
    if (newton_iterations <= steps.fast_newton_iterations) {
      if (++streak >= steps.fast_streak) {
        step = steps.grown(step);
        streak = 0;
      }
    } else {
      streak = 0;
    }
  }
  /// Returns false when the step was already at the floor.
  bool failure() {
    streak = 0;
    if (step <= steps.min_step) return false;
    step = std::max(step / 2.0, steps.min_step);
    return true;
  }
};

Formulation sweep_formulation(const SweepSpec& spec, double value) {
  if (spec.parameter == SweepParameter::Voltage) return model::VoltageToCurrent{value};
  return model::ConcentrationToCurrent{spec.voltage, value, spec.first, spec.second};
}

Formulation trace_formulation(const TraceSpec& spec, double current) {
  if (spec.family == TraceFamily::CurrentToVoltage) return model::CurrentToVoltage{current};
  return model::CurrentToConcentration{spec.voltage, current, spec.first, spec.second};
}

void trace_direction(const ChannelSystem& system, const TraceSpec& spec, const StepSettings& steps,
                     const bvp::SolverSettings& settings, const CurvePoint& start, double target,
                     std::vector<CurvePoint>& out);

/// Crosses a fold of a sweep by continuing in I from the last converged point
/// until the response passes `value`, then solves the sweep formulation there.
std::optional<Solution> bridge_jump(const ChannelSystem& system, const SweepSpec& spec,
                                    const bvp::SolverSettings& settings, const CurvePoint& prev,
                                    const CurvePoint* older, double value) {
  const double sweep_dir = spec.end > spec.start ? 1.0 : -1.0;
  double current_dir = 1.0;
  if (older && prev.I != older->I) {
    current_dir = ((prev.I - older->I) / (prev.parameter - older->parameter)) * sweep_dir > 0 ? 1.0 : -1.0;
  }
  TraceSpec trace;
  trace.family = spec.parameter == SweepParameter::Voltage ? TraceFamily::CurrentToVoltage
                                                           : TraceFamily::CurrentToConcentration;
  trace.voltage = spec.voltage;
  trace.first = spec.first;
  trace.second = spec.second;
  (sweep_dir > 0 ? trace.response_max : trace.response_min) = value;
  trace.max_response_step = 0.02 * std::abs(spec.end - spec.start);

  const double scale = 1.0 + std::abs(prev.I);
  StepSettings steps;
  steps.initial_step = 1e-3 * scale;
  steps.min_step = 1e-10 * scale;
  steps.max_step = 10.0 * scale;

  std::vector<CurvePoint> path;
  try {
    trace_direction(system, trace, steps, settings, prev, prev.I + current_dir * 1e4 * scale, path);
  } catch (const NonConvergence&) {
    return std::nullopt;
  }
  if (path.empty()) return std::nullopt;
  const CurvePoint& b = path.back();
  const CurvePoint& a = path.size() >= 2 ? path[path.size() - 2] : prev;
  const double rb = response(b);
  if ((rb - value) * sweep_dir < 0.0) return std::nullopt;
  const double ra = response(a);
  const double t = ra == rb ? 1.0 : (value - ra) / (rb - ra);
  Eigen::MatrixXd guess = a.solution->values;
  for (std::size_t k = 0; k < a.solution->mesh.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    guess.col(j) += t * (bvp::evaluate(*b.solution, a.solution->mesh[k]) - guess.col(j));
  }
  try {
    return bvp::solve_bvp(model::build_bvp(system, sweep_formulation(spec, value)), a.solution->mesh, guess,
                          settings);
  } catch (const NonConvergence&) {
  } catch (const MeshBudgetExceeded&) {
  }
  return std::nullopt;
}

}  // namespace

std::string ShapeClass::name() const {
  switch (kind) {
    case ShapeKind::Monotonic:
      return "Monotonic";
    case ShapeKind::SShaped:
      return "SShaped";
    case ShapeKind::DoubleSShaped:
      return "DoubleSShaped";
    case ShapeKind::Other:
      break;
  }
  return "Other(" + std::to_string(turning_count) + ")";
}

void StepSettings::validate() const {
  if (!(min_step > 0.0) || !(initial_step >= min_step) || !(max_step >= initial_step)) {
    throw InvalidSystem("step settings need 0 < min_step <= initial_step <= max_step");
  }
  if (!(growth > 1.0 && growth <= 1.5)) throw InvalidSystem("step growth must lie in (1, 1.5]");
  if (fast_streak < 1) throw InvalidSystem("fast_streak must be positive");
}

double StepSettings::grown(double step) const { return std::min(step * growth, max_step); }

std::function<Eigen::VectorXd(double)> linear_guess(const ChannelSystem& system, const Formulation& formulation) {
  const std::size_t m = system.species_count();
  std::vector<double> left(m), right(m);
  for (std::size_t i = 0; i < m; ++i) {
    left[i] = system.species[i].c_left;
    right[i] = system.species[i].c_right;
  }
  double voltage = 0.0;
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, model::VoltageToCurrent>) {
          voltage = f.voltage;
        } else if constexpr (std::is_same_v<F, model::ConcentrationToCurrent>) {
          voltage = f.voltage;
          right[f.first] = f.c_b;
          right[f.second] = model::paired_concentration(system, f.c_b, f.first, f.second);
        } else if constexpr (std::is_same_v<F, model::CurrentToConcentration>) {
          voltage = f.voltage;
        }
      },
      formulation);
  const Eigen::Index n = system.state_dimension();
  return [=](double x) {
    const double t = (x + 1.0) / 2.0;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    y[model::state::kPotential] = voltage * t;
    y[model::state::kField] = voltage / 2.0;
    for (std::size_t i = 0; i < m; ++i) y[model::state::concentration(i)] = left[i] + t * (right[i] - left[i]);
    return y;
  };
}

Solution sigma_ramp(const ChannelSystem& system, const Formulation& formulation, const bvp::SolverSettings& settings) {
  const double target = system.profile.sigma;
  if (!(target >= 0.0)) throw InvalidSystem("sigma must be nonnegative");
  Solution sol = bvp::solve_bvp(model::build_bvp(system.with_sigma(0.0), formulation),
                                linear_guess(system, formulation), settings);
  if (target == 0.0) return sol;

  double sigma = 0.0;
  double step = 0.1 * target;
  const double floor = 1e-4 * target;
  int successes = 0;
  while (sigma < target) {
    const double next = std::min(target, sigma + step);
    try {
      sol = bvp::solve_bvp(model::build_bvp(system.with_sigma(next), formulation), sol, settings);
      sigma = next;
      if (++successes >= 2) step *= 1.5;
    } catch (const NonConvergence&) {
      successes = 0;
      step /= 2.0;
    } catch (const MeshBudgetExceeded&) {
      successes = 0;
      step /= 2.0;
    }
    if (step < floor) {
      throw NonConvergence("sigma ramp stalled at sigma = " + std::to_string(sigma));
    }
  }
  return sol;
}

StepSettings default_sweep_steps(const SweepSpec& spec) {
  const double width = std::abs(spec.end - spec.start);
  StepSettings s;
  s.min_step = 1e-4 * width;
  s.initial_step = 1e-2 * width;
  s.max_step = 2e-2 * width;
  return s;
}

Branch sweep(const ChannelSystem& system, const SweepSpec& spec, const StepSettings& steps,
             const bvp::SolverSettings& settings) {
  return sweep_from(system, spec, steps, settings, sigma_ramp(system, sweep_formulation(spec, spec.start), settings));
}

Branch sweep_from(const ChannelSystem& system, const SweepSpec& spec, const StepSettings& steps,
                  const bvp::SolverSettings& settings, Solution start) {
  steps.validate();
  if (!std::isfinite(spec.start) || !std::isfinite(spec.end) || spec.start == spec.end) {
    throw InvalidSystem("sweep range must be finite and nonempty");
  }
  const double direction = spec.end > spec.start ? 1.0 : -1.0;
  Branch branch;
  branch.parameter_name = spec.parameter == SweepParameter::Voltage ? "V" : "c_B";
  branch.points.push_back(
      make_point(system, sweep_formulation(spec, spec.start), std::move(start), spec.start, StepMeta{0.0, 0}));

  StepController control(steps);
  const double eps = 1e-12 * std::abs(spec.end - spec.start);
  while (direction * (spec.end - branch.points.back().parameter) > eps) {
    const CurvePoint& prev = branch.points.back();
    const double step = std::min(control.step, std::abs(spec.end - prev.parameter));
    const double next = prev.parameter + direction * step;
    const Formulation f = sweep_formulation(spec, next);
    const auto bvp_spec = model::build_bvp(system, f);

    std::optional<Solution> sol;
    try {
      Solution s = bvp::solve_bvp(bvp_spec, *prev.solution, settings);
      if (!has_negative_concentration(system, s)) sol = std::move(s);
    } catch (const NonConvergence&) {
    } catch (const MeshBudgetExceeded&) {
    }

    if (sol && branch.points.size() >= 2) {
      // A converged solve far off the secant prediction has slipped onto
      // another branch; treat it like a failure until the floor is reached.
      const CurvePoint& older = branch.points[branch.points.size() - 2];
      const double slope = (prev.I - older.I) / (prev.parameter - older.parameter);
      const double change = model::total_current(sol->right(), system.valences()) - prev.I;
      const double expected = std::abs(slope * (next - prev.parameter));
      if (std::abs(change) > 4.0 * expected + 1e-3 * (1.0 + std::abs(prev.I)) && step > steps.min_step) {
        sol.reset();
      }
    }

    if (sol) {
      control.success(sol->newton_iterations);
      branch.points.push_back(make_point(system, f, std::move(*sol), next, StepMeta{step, 0}));
      continue;
    }
    if (control.failure()) continue;

    // Step floor reached: restart from scratch at the same parameter value,
    // or walk the curve in I across the fold when the fresh ramp stalls.
    std::optional<Solution> fresh;
    try {
      fresh = sigma_ramp(system, f, settings);
    } catch (const NonConvergence&) {
      const CurvePoint* older = branch.points.size() >= 2 ? &branch.points[branch.points.size() - 2] : nullptr;
      fresh = bridge_jump(system, spec, settings, prev, older, next);
    }
    if (!fresh) throw NonConvergence("sweep could not restart at " + branch.parameter_name + " = " + std::to_string(next));
    CurvePoint landed = make_point(system, f, std::move(*fresh), next, StepMeta{step, 0});
    const double from = prev.I;
    if (std::abs(landed.I - from) > 1e-3 * (1.0 + std::abs(from))) {
      branch.jump_events.push_back(JumpEvent{next, from, landed.I});
    }
    branch.points.push_back(std::move(landed));
    control.step = steps.initial_step;
  }
  return branch;
}

StepSettings default_trace_steps(const TraceSpec& spec) {
  const double width = std::abs(spec.current_max - spec.current_min);
  StepSettings s;
  s.min_step = 1e-9 * width;
  s.initial_step = 1e-3 * width;
  s.max_step = 2e-2 * width;
  return s;
}

namespace {

/// Continues the trace from `start` toward `target`, appending accepted points.
void trace_direction(const ChannelSystem& system, const TraceSpec& spec, const StepSettings& steps,
                     const bvp::SolverSettings& settings, const CurvePoint& start, double target,
                     std::vector<CurvePoint>& out) {
  const double direction = target >= start.I ? 1.0 : -1.0;
  StepController control(steps);
  CurvePoint prev = start;
  std::optional<CurvePoint> older;
  const double eps = 1e-12 * std::max(1.0, std::abs(target));
  while (direction * (target - prev.I) > eps) {
    const double step = std::min(control.step, std::abs(target - prev.I));
    const double next = prev.I + direction * step;
    const Formulation f = trace_formulation(spec, next);
    const auto bvp_spec = model::build_bvp(system, f);

    std::optional<CurvePoint> point;
    try {
      Solution s = older ? bvp::solve_bvp(bvp_spec, prev.solution->mesh,
                                          secant_guess(*prev.solution, *older->solution,
                                                       (next - prev.I) / (prev.I - older->I)),
                                          settings)
                         : bvp::solve_bvp(bvp_spec, *prev.solution, settings);
      if (has_negative_concentration(system, s)) return;
      point = make_point(system, f, std::move(s), next, StepMeta{step, 0});
    } catch (const NonConvergence&) {
    } catch (const MeshBudgetExceeded&) {
    }

    if (point) {
      const double r0 = response(prev);
      const double r1 = response(*point);
      const double bound = std::max(spec.max_response_step, spec.max_response_relative * std::abs(r0));
      if (std::abs(r1 - r0) > bound && step > steps.min_step) point.reset();
    }
    if (!point) {
      if (control.failure()) continue;
      throw NonConvergence("trace stalled at I = " + std::to_string(prev.I));
    }
    control.success(point->solution->newton_iterations);
    out.push_back(*point);
    const double r = response(*point);
    if (r < spec.response_min || r > spec.response_max) return;
    older = std::move(prev);
    prev = std::move(*point);
  }
}

}  // namespace

Branch trace_curve(const ChannelSystem& system, const TraceSpec& spec, const StepSettings& steps,
                   const bvp::SolverSettings& settings) {
  steps.validate();
  if (!(spec.current_max > spec.current_min)) throw InvalidSystem("trace needs current_min < current_max");
  const Formulation start_f =
      spec.family == TraceFamily::CurrentToVoltage
          ? Formulation{model::VoltageToCurrent{spec.start_voltage}}
          : Formulation{model::ConcentrationToCurrent{spec.voltage, spec.start_concentration, spec.first, spec.second}};
  Solution start_sol = sigma_ramp(system, start_f, settings);
  const double i0 = model::total_current(start_sol.right(), system.valences());
  const CurvePoint start = make_point(system, trace_formulation(spec, i0), std::move(start_sol), i0, StepMeta{});

  std::vector<CurvePoint> up, down;
  trace_direction(system, spec, steps, settings, start, std::max(spec.current_max, i0), up);
  trace_direction(system, spec, steps, settings, start, std::min(spec.current_min, i0), down);

  Branch branch;
  branch.parameter_name = "I";
  branch.points.reserve(up.size() + down.size() + 1);
  for (auto it = down.rbegin(); it != down.rend(); ++it) branch.points.push_back(std::move(*it));
  branch.points.push_back(start);
  for (auto& p : up) branch.points.push_back(std::move(p));
  return branch;
}

double response(const CurvePoint& point) { return point.c_b ? *point.c_b : point.V; }

ShapeClass classify_shape(const Branch& branch) {
  if (branch.points.size() < 5) throw TooFewPoints("shape classification needs at least 5 points");
  double scale = 0.0;
  for (const auto& p : branch.points) scale = std::max(scale, std::abs(response(p)));
  const double noise = 1e-12 * (1.0 + scale);
  int changes = 0;
  int last_sign = 0;
  for (std::size_t k = 0; k + 1 < branch.points.size(); ++k) {
    const double d = response(branch.points[k + 1]) - response(branch.points[k]);
    if (std::abs(d) <= noise) continue;
    const int sign = d > 0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++changes;
    last_sign = sign;
  }
  switch (changes) {
    case 0:
      return {ShapeKind::Monotonic, 0};
    case 2:
      return {ShapeKind::SShaped, 2};
    case 4:
      return {ShapeKind::DoubleSShaped, 4};
    default:
      return {ShapeKind::Other, changes};
  }
}

std::vector<double> crossings(const Branch& branch, double level) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < branch.points.size(); ++k) {
    const auto& a = branch.points[k];
    const auto& b = branch.points[k + 1];
    const double ra = response(a);
    const double rb = response(b);
    if ((ra < level) == (rb < level)) continue;
    const double t = (level - ra) / (rb - ra);
    out.push_back(a.I + t * (b.I - a.I));
  }
  return out;
}

std::vector<PhaseCell> phase_diagram(const ChannelSystem& base, const std::vector<double>& sigmas,
                                     const std::vector<double>& kappas, const TraceSpec& trace,
                                     const StepSettings& steps, const bvp::SolverSettings& settings,
                                     unsigned threads) {
  std::vector<PhaseCell> cells;
  cells.reserve(sigmas.size() * kappas.size());
  for (double s : sigmas) {
    for (double k : kappas) cells.push_back(PhaseCell{s, k, std::nullopt, {}});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      PhaseCell& cell = cells[i];
      try {
        const ChannelSystem system = base.with_sigma(cell.sigma).with_kappa(cell.kappa);
        cell.shape = classify_shape(trace_curve(system, trace, steps, settings));
      } catch (const std::exception& e) {
        cell.failure = e.what();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

}  // namespace sspnp::continuation
