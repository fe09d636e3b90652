#pragma once

#include <Eigen/Dense>
#include <span>

#include "sspnp/model/channel_system.hpp"

namespace sspnp::model {

/// F(Y) of the first-order steady PNP system:
///   phi' = mu,  mu' = -kappa (sum_j z_j c_j + rho_f(x)),
///   c_i' = J_i - z_i c_i mu,  J_i' = 0.
Eigen::VectorXd ode_rhs(const ChannelSystem& system, double x, const Eigen::VectorXd& y);

/// dF/dY; only the rho_f term depends on x, so the Jacobian is x-independent.
Eigen::MatrixXd ode_jacobian(const ChannelSystem& system, double x, const Eigen::VectorXd& y);

/// I = sum_i z_i J_i.
double total_current(const Eigen::VectorXd& y, std::span<const int> valences);

}  // namespace sspnp::model
