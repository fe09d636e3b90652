#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fd_oracle.hpp"
#include "sspnp/bvp/solve.hpp"
#include "sspnp/continuation/continuation.hpp"
#include "sspnp/errors.hpp"
#include "sspnp/model/formulation.hpp"
#include "sspnp/model/ivaug.hpp"
#include "sspnp/model/ode.hpp"
#include "sspnp/model/scales.hpp"

using namespace sspnp;
using namespace sspnp::model;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(std::mt19937& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

template <class F>
MatrixXd central_difference(const F& f, const VectorXd& y) {
  const VectorXd f0 = f(y);
  MatrixXd jac(f0.size(), y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double h = 1e-4 * (1.0 + std::abs(y[j]));
    VectorXd yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    jac.col(j) = (f(yp) - f(ym)) / (2.0 * h);
  }
  return jac;
}

double relative_gap(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

ChannelSystem neutral_pair(double sigma) {
  ChannelSystem s = two_ion_channel(60.0, sigma);
  return s;
}

}  // namespace

TEST(FixedCharge, TwoIonProfileValues) {
  const auto s = two_ion_channel();
  EXPECT_EQ(fixed_charge_at(s.profile, -0.75), 1.0);
  EXPECT_EQ(fixed_charge_at(s.profile, 0.9), -60.0);
  EXPECT_EQ(fixed_charge_at(s.profile, -0.5), -10.0);  // right-continuous
  EXPECT_EQ(fixed_charge_at(s.profile, 1.0), -60.0);
  EXPECT_THROW(fixed_charge_at(s.profile, 1.01), OutOfDomain);
  const auto zero = two_ion_channel(60.0, 0.0);
  for (double x : {-1.0, -0.3, 0.0, 0.7}) EXPECT_EQ(fixed_charge_at(zero.profile, x), 0.0);
}

TEST(FixedCharge, LengthsMustTileTheChannel) {
  FixedChargeProfile p{{0.5, 0.5, 0.5}, {1, 2, 3}, 1.0};
  EXPECT_THROW(p.validate(), InvalidSystem);
  p.lengths = {0.4, 0.6, 1.0};
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.interfaces(), (std::vector<double>{-0.6, 0.0}));
}

TEST(Neutrality, PresetSystemsAreNeutral) {
  EXPECT_TRUE(check_neutrality(two_ion_channel().species).ok);
  EXPECT_TRUE(check_neutrality(five_ion_channel().species).ok);
  const std::vector<Species> bad{{1, 1.0, 1.0}, {-1, 2.0, 1.0}};
  const auto report = check_neutrality(bad);
  EXPECT_FALSE(report.ok);
  EXPECT_DOUBLE_EQ(report.left_imbalance, -1.0);
  EXPECT_DOUBLE_EQ(report.right_imbalance, 0.0);
  ChannelSystem sys = two_ion_channel();
  sys.species = bad;
  EXPECT_THROW(sys.validate(), NeutralityViolated);
}

TEST(Scales, DebyeLengthAndKappa) {
  PhysicalScales scales;
  const auto nd = nondimensionalize(scales);
  EXPECT_NEAR(nd.debye_length * 1e9, 0.687, 0.005);

  scales.half_length = nd.debye_length;
  EXPECT_NEAR(nondimensionalize(scales).kappa, 0.5, 1e-12);

  PhysicalScales denser = scales;
  denser.concentration *= 4.0;
  EXPECT_NEAR(nondimensionalize(denser).debye_length, nd.debye_length / 2.0, 1e-15);

  scales.temperature = -1.0;
  EXPECT_THROW(nondimensionalize(scales), NonPositiveScale);
  EXPECT_NEAR(thermal_voltage(300.0) * 1e3, 25.85, 0.01);
}

TEST(OdeRhs, RestStateAndHandEvaluation) {
  ChannelSystem rest = two_ion_channel(60.0, 0.0);
  VectorXd y(6);
  y << 0, 0, 1, 0, 1, 0;
  EXPECT_EQ(ode_rhs(rest, 0.3, y).cwiseAbs().maxCoeff(), 0.0);

  const auto s = two_ion_channel();
  y << 0, 0, 1, 0, 0.5, 0;
  EXPECT_DOUBLE_EQ(ode_rhs(s, -0.75, y)[state::kField], -90.0);
  EXPECT_THROW(ode_rhs(s, 0.0, VectorXd::Zero(5)), DimensionMismatch);
}

TEST(OdeRhs, MatchesSecondOrderForm) {
  // phi'' = -kappa (sum z c + rho), c_i' = J_i - z_i c_i phi', J_i' = 0.
  const auto s = five_ion_channel();
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd y = random_vector(rng, s.state_dimension());
    const double x = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const VectorXd f = ode_rhs(s, x, y);
    double charge = fixed_charge_at(s.profile, x);
    for (std::size_t i = 0; i < s.species.size(); ++i) charge += s.species[i].valence * y[2 + 2 * i];
    EXPECT_DOUBLE_EQ(f[0], y[1]);
    EXPECT_NEAR(f[1], -s.kappa * charge, 1e-9 * (1.0 + std::abs(f[1])));
    for (std::size_t i = 0; i < s.species.size(); ++i) {
      EXPECT_DOUBLE_EQ(f[2 + 2 * i], y[3 + 2 * i] - s.species[i].valence * y[2 + 2 * i] * y[1]);
      EXPECT_EQ(f[3 + 2 * i], 0.0);
    }
  }
}

TEST(OdeJacobian, AgreesWithFiniteDifferencesAtRandomStates) {
  std::mt19937 rng(11);
  for (const auto& s : {two_ion_channel(), five_ion_channel()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd y = random_vector(rng, s.state_dimension());
      const double x = std::uniform_real_distribution<double>(-0.99, 0.99)(rng);
      const MatrixXd fd = central_difference([&](const VectorXd& v) { return ode_rhs(s, x, v); }, y);
      EXPECT_LE(relative_gap(ode_jacobian(s, x, y), fd), 1e-6);
    }
  }
}

TEST(OdeJacobian, StructuralEntries) {
  const auto s = two_ion_channel();
  std::mt19937 rng(3);
  const MatrixXd j = ode_jacobian(s, 0.1, random_vector(rng, 6));
  EXPECT_EQ(j(1, 2), -s.kappa * 1);
  EXPECT_EQ(j(0, 1), 1.0);
  EXPECT_EQ(j.row(3).cwiseAbs().sum(), 0.0);

  VectorXd y = VectorXd::Zero(6);
  y[3] = 4.0;
  const MatrixXd c = ode_jacobian(s, 0.1, y);
  MatrixXd expect = MatrixXd::Zero(6, 6);
  expect(0, 1) = 1;
  expect(1, 2) = -60;
  expect(1, 4) = 60;
  expect(2, 3) = 1;
  expect(4, 5) = 1;
  EXPECT_EQ((c - expect).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TotalCurrent, DirectFormula) {
  VectorXd y = VectorXd::Zero(6);
  const std::vector<int> z{1, -1};
  EXPECT_EQ(total_current(y, z), 0.0);
  y[3] = 2.0;
  y[5] = -3.0;
  EXPECT_EQ(total_current(y, z), 5.0);
}

TEST(BuildBvp, BoundaryResidualsPerFormulation) {
  const auto s = two_ion_channel();
  VectorXd ya(6), yb(6);
  ya << 0, 0.3, 1, 2, 1, -1;
  yb << 16, 0.1, 0.5, 2, 0.5, -1;

  const auto v2i = build_bvp(s, VoltageToCurrent{16.0});
  EXPECT_EQ(v2i.dimension, 6);
  EXPECT_EQ(v2i.interface_points, (std::vector<double>{-0.5, 0.0, 0.5}));
  EXPECT_EQ(v2i.bc_residual(ya, yb).cwiseAbs().maxCoeff(), 0.0);

  const auto i2v = build_bvp(s, CurrentToVoltage{2.5});
  const VectorXd r = i2v.bc_residual(ya, yb);
  EXPECT_DOUBLE_EQ(r[1], (2.0 + 1.0) - 2.5);

  // c_2(1) = -(z_1 c_B) / z_2 for two species.
  EXPECT_DOUBLE_EQ(paired_concentration(s, 0.5, 0, 1), 0.5);
  const auto c2i = build_bvp(s, ConcentrationToCurrent{16.0, 0.8, 0, 1});
  VectorXd yc = yb;
  yc[2] = 0.8;
  yc[4] = 0.8;
  EXPECT_EQ(c2i.bc_residual(ya, yc).cwiseAbs().maxCoeff(), 0.0);

  const auto i2c = build_bvp(s, CurrentToConcentration{16.0, 3.0, 0, 1});
  EXPECT_EQ(i2c.bc_residual(ya, yc).cwiseAbs().maxCoeff(), 0.0);
  yc[4] = 0.7;
  EXPECT_NEAR(i2c.bc_residual(ya, yc).cwiseAbs().maxCoeff(), 0.1, 1e-15);

  auto same_sign = five_ion_channel();
  EXPECT_THROW(build_bvp(same_sign, ConcentrationToCurrent{0.0, 1.0, 0, 4}), InvalidFormulation);
}

TEST(BuildBvp, BoundaryJacobiansMatchFiniteDifferences) {
  const auto s = five_ion_channel();
  std::mt19937 rng(5);
  const std::vector<Formulation> forms{VoltageToCurrent{3.0}, CurrentToVoltage{2.0},
                                       ConcentrationToCurrent{1.0, 0.7, 2, 3}, CurrentToConcentration{1.0, 4.0, 0, 1}};
  for (const auto& f : forms) {
    const auto spec = build_bvp(s, f);
    const VectorXd ya = random_vector(rng, 12);
    const VectorXd yb = random_vector(rng, 12);
    const auto j = spec.bc_jacobians(ya, yb);
    EXPECT_LE(relative_gap(j.left, central_difference([&](const VectorXd& v) { return spec.bc_residual(v, yb); }, ya)),
              1e-8)
        << formulation_name(f);
    EXPECT_LE(relative_gap(j.right, central_difference([&](const VectorXd& v) { return spec.bc_residual(ya, v); }, yb)),
              1e-8)
        << formulation_name(f);
  }
}

TEST(Ivaug, DimensionsAndInhomogeneousHatTerm) {
  EXPECT_EQ(build_ivaug(two_ion_channel(), 0.0).dimension, 11);
  EXPECT_EQ(build_ivaug(five_ion_channel(), 0.0).dimension, 23);

  const auto s = two_ion_channel();
  const AugmentedLayout at{2};
  VectorXd u = VectorXd::Zero(11);
  u[at.concentration(0)] = 1.0;
  u[at.concentration(1)] = 1.0;
  const VectorXd f = ivaug_rhs(s, 0.2, u);
  EXPECT_DOUBLE_EQ(f[at.hat_concentration(1)], 1.0 / -1.0);
  EXPECT_THROW(build_ivaug(s, std::nan("")), InvalidFormulation);
}

TEST(Ivaug, JacobianAgreesWithFiniteDifferences) {
  std::mt19937 rng(19);
  for (const auto& s : {two_ion_channel(), five_ion_channel()}) {
    const AugmentedLayout at{s.species_count()};
    for (int trial = 0; trial < 50; ++trial) {
      const VectorXd u = random_vector(rng, at.dimension());
      const MatrixXd fd = central_difference([&](const VectorXd& v) { return ivaug_rhs(s, 0.3, v); }, u);
      EXPECT_LE(relative_gap(ivaug_jacobian(s, 0.3, u), fd), 1e-6);
    }
  }
}

TEST(Ivaug, BaseBlockIsThePlainSystemAndHatIsItsLinearization) {
  // Directional derivative of the plain rhs along dY equals the hat rhs.
  const auto s = five_ion_channel();
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd y = random_vector(rng, 12);
    VectorXd dy = random_vector(rng, 12);
    dy[state::flux(4)] = 0.0;
    double other = 0.0;
    for (std::size_t i = 0; i < 4; ++i) other += s.species[i].valence * dy[state::flux(i)];
    dy[state::flux(4)] = (1.0 - other) / s.species[4].valence;  // d(total current)/dI = 1
    const VectorXd u = to_augmented(s, y, dy);
    EXPECT_LE((base_state(s, u) - y).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((hat_state(s, u) - dy).cwiseAbs().maxCoeff(), 1e-12);
    const VectorXd f = ivaug_rhs(s, -0.1, u);
    const VectorXd plain = ode_rhs(s, -0.1, y);
    const VectorXd lin = ode_jacobian(s, -0.1, y) * dy;
    const AugmentedLayout at{5};
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(f[at.concentration(i)], plain[state::concentration(i)], 1e-12);
      EXPECT_NEAR(f[at.hat_concentration(i)], lin[state::concentration(i)], 1e-10);
    }
    EXPECT_NEAR(f[at.hat_field()], lin[state::kField], 1e-9);
  }
}

TEST(Solve, ZeroChargeMatchesFiniteDifferenceOracle) {
  const auto s = neutral_pair(0.0);
  const auto sol = bvp::solve_bvp(build_bvp(s, VoltageToCurrent{16.0}),
                                  continuation::linear_guess(s, VoltageToCurrent{16.0}));
  const auto fd = oracle::solve_v2i_fd(s, 16.0, 8001, [](double x) {
    VectorXd g(3);
    g << 8.0 * (x + 1.0), 1.0 - 0.25 * (x + 1.0), 1.0 - 0.25 * (x + 1.0);
    return g;
  });
  double err = 0.0;
  for (std::size_t k = 0; k < fd.x.size(); ++k) {
    const VectorXd y = bvp::evaluate(sol, fd.x[k]);
    err = std::max({err, std::abs(y[0] - fd.phi[k]), std::abs(y[2] - fd.c[0][k]), std::abs(y[4] - fd.c[1][k])});
  }
  EXPECT_LE(err, 1e-5);
  EXPECT_NEAR(total_current(sol.right(), s.valences()), fd.flux[0] - fd.flux[1], 1e-5);
}

TEST(Solve, InvariantsOnConvergedSolution) {
  const auto s = two_ion_channel();
  const auto sol = continuation::sigma_ramp(s, VoltageToCurrent{16.0});
  const double current = total_current(sol.right(), s.valences());
  for (std::size_t k = 0; k < sol.mesh.size(); ++k) {
    const VectorXd y = sol.node(k);
    EXPECT_LE(std::abs(total_current(y, s.valences()) - current), 1e-6);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_LE(std::abs(y[state::flux(i)] - sol.left()[state::flux(i)]), 1e-6);
      EXPECT_GT(y[state::concentration(i)], 0.0);
    }
  }
}

TEST(Solve, FormulationRoundTrip) {
  const auto s = two_ion_channel();
  const auto v2i = continuation::sigma_ramp(s, VoltageToCurrent{10.0});
  const double current = total_current(v2i.right(), s.valences());
  const auto i2v = bvp::solve_bvp(build_bvp(s, CurrentToVoltage{current}), v2i);
  EXPECT_NEAR(i2v.right()[state::kPotential], 10.0, 1e-6);

  // c_B = c_1^R reproduces the V2I problem.
  const auto c2i = bvp::solve_bvp(build_bvp(s, ConcentrationToCurrent{10.0, 0.5, 0, 1}), v2i);
  EXPECT_NEAR(total_current(c2i.right(), s.valences()), current, 1e-6);
  const auto i2c = bvp::solve_bvp(build_bvp(s, CurrentToConcentration{10.0, current, 0, 1}), v2i);
  EXPECT_NEAR(i2c.right()[state::concentration(0)], 0.5, 1e-6);
}
