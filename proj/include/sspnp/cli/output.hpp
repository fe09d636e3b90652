#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sspnp/continuation/continuation.hpp"
#include "sspnp/model/channel_system.hpp"
#include "sspnp/turning/turning_points.hpp"

namespace sspnp::cli {

/// 17 significant digits in scientific notation; "inf"/"-inf" for infinities.
std::string format_number(double value);

/// CurveRecord rows: index, swept_param_name, swept_param_value, V, I, c_B,
/// newton_iters, mesh_size, jump_flag. A point reached by a branch jump has
/// jump_flag = 1.
void write_curve_csv(std::ostream& out, const continuation::Branch& branch);

/// x, phi, mu, c_1..c_M, J_1..J_M on the solution mesh.
void write_profile_csv(std::ostream& out, const model::ChannelSystem& system, const continuation::Solution& solution);

void write_folds_csv(std::ostream& out, const std::vector<turning::TurningPoint>& folds);
void write_multiplicity_csv(std::ostream& out, const turning::MultiplicityMap& map);
void write_phase_csv(std::ostream& out, const std::vector<continuation::PhaseCell>& cells);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<std::pair<double, double>> markers;  // drawn as stars
};

/// Static SVG 1.1 line plot with linear axes.
void write_svg(std::ostream& out, const Plot& plot);

}  // namespace sspnp::cli
