#include "sspnp/model/ode.hpp"

#include <string>

#include "sspnp/errors.hpp"

namespace sspnp::model {

namespace {

void check_dimension(const ChannelSystem& system, const Eigen::VectorXd& y) {
  if (y.size() != system.state_dimension()) {
    throw DimensionMismatch("state vector has " + std::to_string(y.size()) + " entries, expected " +
                            std::to_string(system.state_dimension()));
  }
}

}  // namespace

Eigen::VectorXd ode_rhs(const ChannelSystem& system, double x, const Eigen::VectorXd& y) {
  check_dimension(system, y);
  const double mu = y[state::kField];
  Eigen::VectorXd f(y.size());
  double charge = fixed_charge_at(system.profile, x);
  for (std::size_t i = 0; i < system.species.size(); ++i) {
    const double z = system.species[i].valence;
    const double c = y[state::concentration(i)];
    charge += z * c;
    f[state::concentration(i)] = y[state::flux(i)] - z * c * mu;
    f[state::flux(i)] = 0.0;
  }
  f[state::kPotential] = mu;
  f[state::kField] = -system.kappa * charge;
  return f;
}

Eigen::MatrixXd ode_jacobian(const ChannelSystem& system, double /*x*/, const Eigen::VectorXd& y) {
  check_dimension(system, y);
  const Eigen::Index n = y.size();
  const double mu = y[state::kField];
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  jac(state::kPotential, state::kField) = 1.0;
  for (std::size_t i = 0; i < system.species.size(); ++i) {
    const double z = system.species[i].valence;
    const Eigen::Index ci = state::concentration(i);
    jac(state::kField, ci) = -system.kappa * z;
    jac(ci, state::kField) = -z * y[ci];
    jac(ci, ci) = -z * mu;
    jac(ci, state::flux(i)) = 1.0;
  }
  return jac;
}

double total_current(const Eigen::VectorXd& y, std::span<const int> valences) {
  double current = 0.0;
  for (std::size_t i = 0; i < valences.size(); ++i) current += valences[i] * y[state::flux(i)];
  return current;
}

}  // namespace sspnp::model
