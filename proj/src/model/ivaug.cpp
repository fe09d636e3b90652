#include "sspnp/model/ivaug.hpp"

#include <cmath>
#include <string>

#include "sspnp/errors.hpp"
#include "sspnp/model/ode.hpp"

namespace sspnp::model {

namespace {

void check_dimension(const ChannelSystem& system, const Eigen::VectorXd& u) {
  const AugmentedLayout at{system.species_count()};
  if (u.size() != at.dimension()) {
    throw DimensionMismatch("augmented state has " + std::to_string(u.size()) + " entries, expected " +
                            std::to_string(at.dimension()));
  }
}

}  // namespace

Eigen::VectorXd ivaug_rhs(const ChannelSystem& system, double x, const Eigen::VectorXd& u) {
  check_dimension(system, u);
  const std::size_t m = system.species_count();
  const std::size_t last = m - 1;
  const AugmentedLayout at{m};
  const double mu = u[at.field()];
  const double mu_hat = u[at.hat_field()];
  const double z_last = system.species[last].valence;

  Eigen::VectorXd f = Eigen::VectorXd::Zero(u.size());
  double charge = fixed_charge_at(system.profile, x);
  double charge_hat = 0.0;
  double other_current = 0.0;
  double other_current_hat = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double z = system.species[i].valence;
    const double c = u[at.concentration(i)];
    const double c_hat = u[at.hat_concentration(i)];
    charge += z * c;
    charge_hat += z * c_hat;
    if (i == last) continue;
    f[at.concentration(i)] = u[at.flux(i)] - z * c * mu;
    f[at.hat_concentration(i)] = u[at.hat_flux(i)] - z * mu * c_hat - z * c * mu_hat;
    other_current += z * u[at.flux(i)];
    other_current_hat += z * u[at.hat_flux(i)];
  }
  const double c_last = u[at.concentration(last)];
  const double c_last_hat = u[at.hat_concentration(last)];
  f[at.potential()] = mu;
  f[at.field()] = -system.kappa * charge;
  f[at.concentration(last)] = (u[at.current()] - other_current) / z_last - z_last * c_last * mu;
  f[at.hat_potential()] = mu_hat;
  f[at.hat_field()] = -system.kappa * charge_hat;
  f[at.hat_concentration(last)] =
      (1.0 - other_current_hat) / z_last - z_last * mu * c_last_hat - z_last * c_last * mu_hat;
  return f;
}

Eigen::MatrixXd ivaug_jacobian(const ChannelSystem& system, double /*x*/, const Eigen::VectorXd& u) {
  check_dimension(system, u);
  const std::size_t m = system.species_count();
  const std::size_t last = m - 1;
  const AugmentedLayout at{m};
  const double mu = u[at.field()];
  const double mu_hat = u[at.hat_field()];
  const double z_last = system.species[last].valence;

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(u.size(), u.size());
  jac(at.potential(), at.field()) = 1.0;
  jac(at.hat_potential(), at.hat_field()) = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double z = system.species[i].valence;
    const Eigen::Index ci = at.concentration(i);
    const Eigen::Index hi = at.hat_concentration(i);
    jac(at.field(), ci) = -system.kappa * z;
    jac(at.hat_field(), hi) = -system.kappa * z;

    // c_i' and hat c_i' share the drift structure; only the source differs.
    jac(ci, at.field()) = -z * u[ci];
    jac(ci, ci) = -z * mu;
    jac(hi, at.field()) = -z * u[hi];
    jac(hi, hi) = -z * mu;
    jac(hi, ci) = -z * mu_hat;
    jac(hi, at.hat_field()) = -z * u[ci];
    if (i == last) continue;
    jac(ci, at.flux(i)) = 1.0;
    jac(hi, at.hat_flux(i)) = 1.0;
    jac(at.concentration(last), at.flux(i)) = -z / z_last;
    jac(at.hat_concentration(last), at.hat_flux(i)) = -z / z_last;
  }
  jac(at.concentration(last), at.current()) = 1.0 / z_last;
  return jac;
}

bvp::BvpSpec<double> build_ivaug(const ChannelSystem& system, double dvdi_target) {
  system.validate();
  if (!std::isfinite(dvdi_target)) throw InvalidFormulation("dV/dI target must be finite");
  const std::size_t m = system.species_count();
  const AugmentedLayout at{m};
  const Eigen::Index n = at.dimension();
  const auto mm = static_cast<Eigen::Index>(m);

  bvp::BvpSpec<double> spec;
  spec.dimension = n;
  spec.interface_points = system.profile.interfaces();
  spec.rhs = [system](double x, const Eigen::VectorXd& u) { return ivaug_rhs(system, x, u); };
  spec.rhs_jacobian = [system](double x, const Eigen::VectorXd& u) { return ivaug_jacobian(system, x, u); };

  // Rows: phi(-1); c_i(-1) (M); c_i(1) (M); hat phi(-1); hat phi(1);
  // hat c_i(-1) (M); hat c_i(1) (M).
  spec.bc_residual = [system, at, m, mm, dvdi_target](const Eigen::VectorXd& ua, const Eigen::VectorXd& ub) {
    Eigen::VectorXd r(at.dimension());
    r[0] = ua[at.potential()];
    for (std::size_t i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      r[1 + k] = ua[at.concentration(i)] - system.species[i].c_left;
      r[1 + mm + k] = ub[at.concentration(i)] - system.species[i].c_right;
      r[3 + 2 * mm + k] = ua[at.hat_concentration(i)];
      r[3 + 3 * mm + k] = ub[at.hat_concentration(i)];
    }
    r[1 + 2 * mm] = ua[at.hat_potential()];
    r[2 + 2 * mm] = ub[at.hat_potential()] - dvdi_target;
    return r;
  };
  spec.bc_jacobians = [at, m, mm, n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    bvp::BcJacobians<double> j{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    j.left(0, at.potential()) = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      j.left(1 + k, at.concentration(i)) = 1.0;
      j.right(1 + mm + k, at.concentration(i)) = 1.0;
      j.left(3 + 2 * mm + k, at.hat_concentration(i)) = 1.0;
      j.right(3 + 3 * mm + k, at.hat_concentration(i)) = 1.0;
    }
    j.left(1 + 2 * mm, at.hat_potential()) = 1.0;
    j.right(2 + 2 * mm, at.hat_potential()) = 1.0;
    return j;
  };
  return spec;
}

Eigen::VectorXd to_augmented(const ChannelSystem& system, const Eigen::VectorXd& y, const Eigen::VectorXd& dy_di) {
  const std::size_t m = system.species_count();
  const AugmentedLayout at{m};
  if (y.size() != system.state_dimension() || dy_di.size() != system.state_dimension()) {
    throw DimensionMismatch("to_augmented: plain states must have 2M+2 entries");
  }
  Eigen::VectorXd u(at.dimension());
  const Eigen::Index base = system.state_dimension();
  u.head(base - 1) = y.head(base - 1);
  u[at.current()] = total_current(y, system.valences());
  u.segment(at.hat_offset(), base - 1) = dy_di.head(base - 1);
  return u;
}

Eigen::VectorXd base_state(const ChannelSystem& system, const Eigen::VectorXd& u) {
  check_dimension(system, u);
  const std::size_t m = system.species_count();
  const AugmentedLayout at{m};
  const Eigen::Index n = system.state_dimension();
  Eigen::VectorXd y(n);
  y.head(n - 1) = u.head(n - 1);
  double other = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) other += system.species[i].valence * u[at.flux(i)];
  y[state::flux(m - 1)] = (u[at.current()] - other) / system.species[m - 1].valence;
  return y;
}

Eigen::VectorXd hat_state(const ChannelSystem& system, const Eigen::VectorXd& u) {
  check_dimension(system, u);
  const std::size_t m = system.species_count();
  const AugmentedLayout at{m};
  const Eigen::Index n = system.state_dimension();
  Eigen::VectorXd y(n);
  y.head(n - 1) = u.segment(at.hat_offset(), n - 1);
  double other = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) other += system.species[i].valence * u[at.hat_flux(i)];
  y[state::flux(m - 1)] = (1.0 - other) / system.species[m - 1].valence;
  return y;
}

}  // namespace sspnp::model
