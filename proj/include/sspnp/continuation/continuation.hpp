#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sspnp/bvp/solution.hpp"
#include "sspnp/bvp/bvp_spec.hpp"
#include "sspnp/model/channel_system.hpp"
#include "sspnp/model/formulation.hpp"

namespace sspnp::continuation {

using Solution = bvp::BvpSolution<double>;
using SolutionPtr = std::shared_ptr<const Solution>;

struct StepMeta {
  double step = 0.0;
  int newton_iterations = 0;
};

/// One converged point of a sweep or trace.
struct CurvePoint {
  double parameter = 0.0;  // value of the swept quantity (V, c_B or I)
  double V = 0.0;
  double I = 0.0;
  std::optional<double> c_b;
  SolutionPtr solution;
  StepMeta step_meta;
};

struct JumpEvent {
  double parameter = 0.0;
  double from_current = 0.0;
  double to_current = 0.0;
};

struct Branch {
  std::string parameter_name;
  std::vector<CurvePoint> points;
  std::vector<JumpEvent> jump_events;
};

enum class ShapeKind { Monotonic, SShaped, DoubleSShaped, Other };

struct ShapeClass {
  ShapeKind kind = ShapeKind::Monotonic;
  int turning_count = 0;

  std::string name() const;
  bool operator==(const ShapeClass&) const = default;
};

/// Step control shared by ramps, sweeps and traces. Step sizes are absolute
/// in the continued parameter.
struct StepSettings {
  double initial_step = 0.1;
  double min_step = 1e-4;
  double max_step = 1.0;
  double growth = 1.5;
  int fast_newton_iterations = 4;
  int fast_streak = 3;

  void validate() const;
  /// Step after a run of fast solves; never more than `growth` times larger.
  double grown(double step) const;
};

/// Linear interpolation of every boundary-imposed component across [-1, 1]
/// with zero flux. Components the formulation leaves free start at zero.
std::function<Eigen::VectorXd(double)> linear_guess(const model::ChannelSystem& system,
                                                    const model::Formulation& formulation);

/// Solves `formulation` at the system's sigma by continuation from sigma = 0.
/// The first stage starts from linear_guess; the increment starts at 0.1 of
/// the target, halves on failure and grows 1.5x after consecutive successes.
Solution sigma_ramp(const model::ChannelSystem& system, const model::Formulation& formulation,
                    const bvp::SolverSettings& settings = {});

enum class SweepParameter { Voltage, Concentration };

/// V2I over V, or C2I over c_B at fixed voltage. Direction follows start -> end.
struct SweepSpec {
  SweepParameter parameter = SweepParameter::Voltage;
  double start = 0.0;
  double end = 1.0;
  double voltage = 0.0;  // fixed V for concentration sweeps
  std::size_t first = 0;
  std::size_t second = 1;
};

/// Sweep step defaults: floor at 1e-4 of the range width.
StepSettings default_sweep_steps(const SweepSpec& spec);

Branch sweep(const model::ChannelSystem& system, const SweepSpec& spec, const StepSettings& steps,
             const bvp::SolverSettings& settings = {});

/// Sweep starting from a known solution at spec.start instead of a sigma ramp.
Branch sweep_from(const model::ChannelSystem& system, const SweepSpec& spec, const StepSettings& steps,
                  const bvp::SolverSettings& settings, Solution start);

enum class TraceFamily { CurrentToVoltage, CurrentToConcentration };

/// Natural continuation in I over [current_min, current_max]. The start point
/// is the V2I (or C2I) solution at `start_voltage` (and `start_concentration`),
/// continued both ways. A direction stops early when the response leaves
/// [response_min, response_max].
struct TraceSpec {
  TraceFamily family = TraceFamily::CurrentToVoltage;
  double current_min = 0.0;
  double current_max = 1.0;
  double start_voltage = 0.0;
  double start_concentration = 0.5;  // I2C only
  double voltage = 0.0;              // I2C only: fixed V
  std::size_t first = 0;
  std::size_t second = 1;
  double response_min = -1e300;
  double response_max = 1e300;
  /// Adjacent points differ in the response by at most
  /// max(max_response_step, max_response_relative * |response|).
  double max_response_step = 0.5;
  double max_response_relative = 0.02;
};

StepSettings default_trace_steps(const TraceSpec& spec);

Branch trace_curve(const model::ChannelSystem& system, const TraceSpec& spec, const StepSettings& steps,
                   const bvp::SolverSettings& settings = {});

/// V for I2V traces, c_B for I2C traces and concentration sweeps.
double response(const CurvePoint& point);

/// Counts sign changes of the response increments along an I-ordered trace.
ShapeClass classify_shape(const Branch& branch);

/// Currents at which the piecewise-linear trace crosses `level`, ordered as
/// they appear along the trace.
std::vector<double> crossings(const Branch& branch, double level);

struct PhaseCell {
  double sigma = 0.0;
  double kappa = 0.0;
  std::optional<ShapeClass> shape;  // empty when the cell failed
  std::string failure;
};

/// Traces every (sigma, kappa) cell with `trace` and classifies it. Cells run
/// on up to `threads` workers; the result is ordered sigma-major.
std::vector<PhaseCell> phase_diagram(const model::ChannelSystem& base, const std::vector<double>& sigmas,
                                     const std::vector<double>& kappas, const TraceSpec& trace,
                                     const StepSettings& steps, const bvp::SolverSettings& settings,
                                     unsigned threads = 1);

}  // namespace sspnp::continuation
