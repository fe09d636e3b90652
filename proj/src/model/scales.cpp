#include "sspnp/model/scales.hpp"

#include <cmath>

#include "sspnp/errors.hpp"

namespace sspnp::model {

namespace {

constexpr double kElementaryCharge = 1.602176634e-19;  // C
constexpr double kBoltzmann = 1.380649e-23;            // J/K
constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
constexpr double kAvogadro = 6.02214076e23;            // 1/mol

}  // namespace

Nondimensional nondimensionalize(const PhysicalScales& s) {
  if (!(s.half_length > 0.0) || !(s.diffusion_ref > 0.0) || !(s.concentration > 0.0) ||
      !(s.permittivity > 0.0) || !(s.temperature > 0.0)) {
    throw NonPositiveScale("all physical scales must be positive");
  }
  for (double d : s.diffusion) {
    if (!(d > 0.0)) throw NonPositiveScale("diffusion constants must be positive");
  }
  const double number_density = s.concentration * 1000.0 * kAvogadro;  // 1/m^3
  const double thermal_energy = kBoltzmann * s.temperature;
  const double debye = std::sqrt(kVacuumPermittivity * s.permittivity * thermal_energy /
                                 (2.0 * kElementaryCharge * kElementaryCharge * number_density));
  return {s.half_length * s.half_length / (2.0 * debye * debye), debye};
}

double thermal_voltage(double temperature) {
  if (!(temperature > 0.0)) throw NonPositiveScale("temperature must be positive");
  return kBoltzmann * temperature / kElementaryCharge;
}

}  // namespace sspnp::model
