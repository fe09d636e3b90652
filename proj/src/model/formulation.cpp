#include "sspnp/model/formulation.hpp"

#include "sspnp/errors.hpp"
#include "sspnp/model/ode.hpp"

namespace sspnp::model {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_pair(const ChannelSystem& system, std::size_t first, std::size_t second) {
  const std::size_t m = system.species_count();
  if (first >= m || second >= m || first == second) {
    throw InvalidFormulation("concentration pair indices must be distinct species indices");
  }
  if (system.species[first].valence * system.species[second].valence >= 0) {
    throw InvalidFormulation("concentration pair must have valences of opposite sign");
  }
}

/// Row layout shared by all four formulations:
///   0: phi(-1) = 0, 1: voltage or current condition,
///   2..M+1: c_i(-1) = c_i^L, M+2..2M+1: right-end concentration conditions.
/// In I2C the current takes row 1 and phi(1) = V moves into the right block.
struct BcBuilder {
  ChannelSystem system;
  Eigen::Index n;
  std::size_t m;

  Eigen::VectorXd left_part(const Eigen::VectorXd& ya) const {
    Eigen::VectorXd r(n);
    r.setZero();
    r[0] = ya[state::kPotential];
    for (std::size_t i = 0; i < m; ++i) r[2 + i] = ya[state::concentration(i)] - system.species[i].c_left;
    return r;
  }

  bvp::BcJacobians<double> left_jacobian() const {
    bvp::BcJacobians<double> j{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    j.left(0, state::kPotential) = 1.0;
    for (std::size_t i = 0; i < m; ++i) j.left(2 + static_cast<Eigen::Index>(i), state::concentration(i)) = 1.0;
    return j;
  }
};

}  // namespace

std::string formulation_name(const Formulation& formulation) {
  return std::visit(overloaded{[](const VoltageToCurrent&) { return std::string("V2I"); },
                               [](const CurrentToVoltage&) { return std::string("I2V"); },
                               [](const ConcentrationToCurrent&) { return std::string("C2I"); },
                               [](const CurrentToConcentration&) { return std::string("I2C"); }},
                    formulation);
}

double paired_concentration(const ChannelSystem& system, double c_b, std::size_t first, std::size_t second) {
  check_pair(system, first, second);
  double charge = system.species[first].valence * c_b;
  for (std::size_t k = 0; k < system.species_count(); ++k) {
    if (k != first && k != second) charge += system.species[k].valence * system.species[k].c_right;
  }
  return -charge / system.species[second].valence;
}

bvp::BvpSpec<double> build_bvp(const ChannelSystem& system, const Formulation& formulation) {
  system.validate();
  const Eigen::Index n = system.state_dimension();
  const std::size_t m = system.species_count();

  bvp::BvpSpec<double> spec;
  spec.dimension = n;
  spec.interface_points = system.profile.interfaces();
  spec.rhs = [system](double x, const Eigen::VectorXd& y) { return ode_rhs(system, x, y); };
  spec.rhs_jacobian = [system](double x, const Eigen::VectorXd& y) { return ode_jacobian(system, x, y); };

  const std::vector<int> z = system.valences();
  const BcBuilder base{system, n, m};
  const auto right_row = [m](std::size_t i) { return static_cast<Eigen::Index>(m + 2 + i); };

  std::visit(
      overloaded{
          [&](const VoltageToCurrent& f) {
            const double v = f.voltage;
            spec.bc_residual = [base, v, right_row](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb) {
              Eigen::VectorXd r = base.left_part(ya);
              r[1] = yb[state::kPotential] - v;
              for (std::size_t i = 0; i < base.m; ++i) {
                r[right_row(i)] = yb[state::concentration(i)] - base.system.species[i].c_right;
              }
              return r;
            };
            spec.bc_jacobians = [base, right_row](const Eigen::VectorXd&, const Eigen::VectorXd&) {
              auto j = base.left_jacobian();
              j.right(1, state::kPotential) = 1.0;
              for (std::size_t i = 0; i < base.m; ++i) j.right(right_row(i), state::concentration(i)) = 1.0;
              return j;
            };
          },
          [&](const CurrentToVoltage& f) {
            const double current = f.current;
            spec.bc_residual = [base, current, z, right_row](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb) {
              Eigen::VectorXd r = base.left_part(ya);
              r[1] = total_current(yb, z) - current;
              for (std::size_t i = 0; i < base.m; ++i) {
                r[right_row(i)] = yb[state::concentration(i)] - base.system.species[i].c_right;
              }
              return r;
            };
            spec.bc_jacobians = [base, z, right_row](const Eigen::VectorXd&, const Eigen::VectorXd&) {
              auto j = base.left_jacobian();
              for (std::size_t i = 0; i < base.m; ++i) {
                j.right(1, state::flux(i)) = z[i];
                j.right(right_row(i), state::concentration(i)) = 1.0;
              }
              return j;
            };
          },
          [&](const ConcentrationToCurrent& f) {
            check_pair(system, f.first, f.second);
            std::vector<double> targets(m);
            for (std::size_t i = 0; i < m; ++i) targets[i] = system.species[i].c_right;
            targets[f.first] = f.c_b;
            targets[f.second] = paired_concentration(system, f.c_b, f.first, f.second);
            const double v = f.voltage;
            spec.bc_residual = [base, v, targets, right_row](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb) {
              Eigen::VectorXd r = base.left_part(ya);
              r[1] = yb[state::kPotential] - v;
              for (std::size_t i = 0; i < base.m; ++i) r[right_row(i)] = yb[state::concentration(i)] - targets[i];
              return r;
            };
            spec.bc_jacobians = [base, right_row](const Eigen::VectorXd&, const Eigen::VectorXd&) {
              auto j = base.left_jacobian();
              j.right(1, state::kPotential) = 1.0;
              for (std::size_t i = 0; i < base.m; ++i) j.right(right_row(i), state::concentration(i)) = 1.0;
              return j;
            };
          },
          [&](const CurrentToConcentration& f) {
            check_pair(system, f.first, f.second);
            double background = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
              if (k != f.first && k != f.second) background += z[k] * system.species[k].c_right;
            }
            // Right block: row of `first` carries phi(1) = V, row of `second`
            // carries the pair neutrality, the rest keep c_k(1) = c_k^R.
            const std::size_t p = f.first;
            const std::size_t q = f.second;
            const double v = f.voltage;
            const double current = f.current;
            spec.bc_residual = [base, v, current, z, p, q, background, right_row](const Eigen::VectorXd& ya,
                                                                                  const Eigen::VectorXd& yb) {
              Eigen::VectorXd r = base.left_part(ya);
              r[1] = total_current(yb, z) - current;
              for (std::size_t i = 0; i < base.m; ++i) {
                if (i == p) {
                  r[right_row(i)] = yb[state::kPotential] - v;
                } else if (i == q) {
                  r[right_row(i)] =
                      z[p] * yb[state::concentration(p)] + z[q] * yb[state::concentration(q)] + background;
                } else {
                  r[right_row(i)] = yb[state::concentration(i)] - base.system.species[i].c_right;
                }
              }
              return r;
            };
            spec.bc_jacobians = [base, z, p, q, right_row](const Eigen::VectorXd&, const Eigen::VectorXd&) {
              auto j = base.left_jacobian();
              for (std::size_t i = 0; i < base.m; ++i) {
                j.right(1, state::flux(i)) = z[i];
                if (i == p) {
                  j.right(right_row(i), state::kPotential) = 1.0;
                } else if (i == q) {
                  j.right(right_row(i), state::concentration(p)) = z[p];
                  j.right(right_row(i), state::concentration(q)) = z[q];
                } else {
                  j.right(right_row(i), state::concentration(i)) = 1.0;
                }
              }
              return j;
            };
          }},
      formulation);
  return spec;
}

}  // namespace sspnp::model
