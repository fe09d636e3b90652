#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sspnp::model {

/// One mobile ionic species with its reservoir concentrations (units of c_0).
struct Species {
  int valence = 1;
  double c_left = 1.0;
  double c_right = 1.0;
};

/// Piecewise-constant fixed charge: plateau i occupies a segment of length
/// lengths[i], segments tile [-1, 1] left to right, and the charge there is
/// sigma * plateaus[i].
struct FixedChargeProfile {
  std::vector<double> lengths;
  std::vector<double> plateaus;
  double sigma = 1.0;

  /// Interior segment boundaries (the jump abscissae), ascending.
  std::vector<double> interfaces() const;

  /// Throws InvalidSystem when lengths/plateaus are inconsistent.
  void validate() const;
};

/// sigma * plateau of the segment containing x. Right-continuous at interior
/// segment boundaries. Throws OutOfDomain outside [-1, 1].
double fixed_charge_at(const FixedChargeProfile& profile, double x);

struct NeutralityReport {
  double left_imbalance = 0.0;   // sum z_i c_i^L
  double right_imbalance = 0.0;  // sum z_i c_i^R
  bool ok = true;

  std::string describe() const;
};

NeutralityReport check_neutrality(std::span<const Species> species, double tol = 1e-12);

/// Complete description of one dimensionless steady-state channel problem.
struct ChannelSystem {
  double kappa = 1.0;
  std::vector<Species> species;
  FixedChargeProfile profile;

  std::size_t species_count() const { return species.size(); }
  Eigen::Index state_dimension() const { return 2 * static_cast<Eigen::Index>(species.size()) + 2; }
  std::vector<int> valences() const;

  /// Throws InvalidSystem (or NeutralityViolated) if any invariant fails.
  void validate() const;

  ChannelSystem with_sigma(double sigma) const;
  ChannelSystem with_kappa(double kappa) const;
};

/// Component layout of the 2M+2 state vector (phi, mu, c_1, J_1, ..., c_M, J_M).
namespace state {
inline constexpr Eigen::Index kPotential = 0;
inline constexpr Eigen::Index kField = 1;
constexpr Eigen::Index concentration(std::size_t i) { return 2 + 2 * static_cast<Eigen::Index>(i); }
constexpr Eigen::Index flux(std::size_t i) { return 3 + 2 * static_cast<Eigen::Index>(i); }
}  // namespace state

/// Two-ion channel with the alternating four-plateau fixed charge used for
/// the voltage- and concentration-induced hysteresis experiments.
ChannelSystem two_ion_channel(double kappa = 60.0, double sigma = 1.0);

/// Five-ion channel whose I-V curve is double S-shaped.
ChannelSystem five_ion_channel(double kappa = 200.0, double sigma = 1.0);

}  // namespace sspnp::model
