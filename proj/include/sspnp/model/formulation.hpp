#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "sspnp/bvp/bvp_spec.hpp"
#include "sspnp/model/channel_system.hpp"

namespace sspnp::model {

/// Prescribed voltage; the current is read off the solution.
struct VoltageToCurrent {
  double voltage = 0.0;
};

/// Prescribed total current at x = 1; the voltage is read off as phi(1).
struct CurrentToVoltage {
  double current = 0.0;
};

/// Prescribed voltage and right-end concentration c_B of species `first`;
/// species `second` (opposite sign) absorbs right-end neutrality.
struct ConcentrationToCurrent {
  double voltage = 0.0;
  double c_b = 1.0;
  std::size_t first = 0;
  std::size_t second = 1;
};

/// Prescribed voltage and current; the right-end concentrations of the pair
/// are tied only by neutrality, and c_B = c_first(1) is read off.
struct CurrentToConcentration {
  double voltage = 0.0;
  double current = 0.0;
  std::size_t first = 0;
  std::size_t second = 1;
};

using Formulation = std::variant<VoltageToCurrent, CurrentToVoltage, ConcentrationToCurrent, CurrentToConcentration>;

std::string formulation_name(const Formulation& formulation);

/// Right-end concentration of species `second` that keeps the right reservoir
/// neutral when species `first` sits at c_b.
double paired_concentration(const ChannelSystem& system, double c_b, std::size_t first, std::size_t second);

/// Two-point BVP of dimension 2M+2 for the chosen boundary-condition set.
/// Interface points are the fixed-charge jumps.
bvp::BvpSpec<double> build_bvp(const ChannelSystem& system, const Formulation& formulation);

}  // namespace sspnp::model
