#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "sspnp/bvp/bvp_spec.hpp"
#include "sspnp/model/channel_system.hpp"

namespace sspnp::model {

/// Layout of the 4M+3 augmented state. The base block mirrors the plain
/// state vector with J_M replaced by the total current I; the hat block holds
/// the derivatives with respect to I of (phi, mu, c_1, J_1, ..., c_M).
struct AugmentedLayout {
  std::size_t species = 2;

  Eigen::Index dimension() const { return 4 * m() + 3; }
  Eigen::Index potential() const { return 0; }
  Eigen::Index field() const { return 1; }
  Eigen::Index concentration(std::size_t i) const { return 2 + 2 * static_cast<Eigen::Index>(i); }
  /// Flux of species i < M-1.
  Eigen::Index flux(std::size_t i) const { return 3 + 2 * static_cast<Eigen::Index>(i); }
  Eigen::Index current() const { return 2 * m() + 1; }

  Eigen::Index hat_offset() const { return 2 * m() + 2; }
  Eigen::Index hat_potential() const { return hat_offset(); }
  Eigen::Index hat_field() const { return hat_offset() + 1; }
  Eigen::Index hat_concentration(std::size_t i) const { return hat_offset() + concentration(i); }
  Eigen::Index hat_flux(std::size_t i) const { return hat_offset() + flux(i); }

 private:
  Eigen::Index m() const { return static_cast<Eigen::Index>(species); }
};

/// Augmented right-hand side: the steady system with I as an unknown
/// (I' = 0) coupled to its linearization with respect to I.
Eigen::VectorXd ivaug_rhs(const ChannelSystem& system, double x, const Eigen::VectorXd& u);
Eigen::MatrixXd ivaug_jacobian(const ChannelSystem& system, double x, const Eigen::VectorXd& u);

/// Augmented BVP whose solutions are points of the I-V curve with
/// dV/dI = dvdi_target; phi(1) is free and gives V.
bvp::BvpSpec<double> build_ivaug(const ChannelSystem& system, double dvdi_target);

/// Packs a plain state Y and its I-derivative dY/dI into an augmented state.
Eigen::VectorXd to_augmented(const ChannelSystem& system, const Eigen::VectorXd& y, const Eigen::VectorXd& dy_di);

/// Plain state vector (J_M recovered from I) of an augmented state.
Eigen::VectorXd base_state(const ChannelSystem& system, const Eigen::VectorXd& u);

/// dY/dI in plain-state layout (hat J_M recovered from the current identity).
Eigen::VectorXd hat_state(const ChannelSystem& system, const Eigen::VectorXd& u);

}  // namespace sspnp::model
