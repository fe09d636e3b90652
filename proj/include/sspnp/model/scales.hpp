#pragma once

#include <vector>

namespace sspnp::model {

/// Dimensional inputs to the rescaling. Concentrations in mol/L, lengths in
/// metres, diffusion constants in m^2/s, temperature in kelvin.
struct PhysicalScales {
  double half_length = 1e-9;     // L
  double diffusion_ref = 1e-9;   // D_0
  double concentration = 0.2;    // c_0
  double permittivity = 80.0;    // relative, epsilon_r
  double temperature = 300.0;    // T
  std::vector<double> diffusion; // per-species D_i; cancels from the steady 1D system
};

struct Nondimensional {
  double kappa = 0.0;         // L^2 / (2 lambda_D^2)
  double debye_length = 0.0;  // lambda_D in metres
};

/// lambda_D = sqrt(eps_0 eps_r / (2 beta e^2 c_0)) with c_0 converted to a
/// number density; kappa = L^2 / (2 lambda_D^2). Throws NonPositiveScale.
Nondimensional nondimensionalize(const PhysicalScales& scales);

/// k_B T / e in volts.
double thermal_voltage(double temperature);

}  // namespace sspnp::model
