#pragma once

// Second-order finite-difference reference for the V2I problem, written
// against the second-order form of the equations rather than the first-order
// system the collocation solver uses:
//   -phi'' = kappa (sum z_i c_i + rho_f),   c_i' + z_i c_i phi' = J_i (const).
// Poisson is centered at interior nodes; each flux law is centered at
// interval midpoints. The fixed charge at a jump node is the mean of its two
// one-sided values. Undamped Newton with a sparse LU.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sspnp/model/channel_system.hpp"

namespace oracle {

struct FdSolution {
  std::vector<double> x;
  Eigen::VectorXd phi;
  std::vector<Eigen::VectorXd> c;  // per species, per node
  std::vector<double> flux;        // J_i
  int iterations = 0;
};

inline double node_charge(const sspnp::model::FixedChargeProfile& profile, double x) {
  const double right = sspnp::model::fixed_charge_at(profile, x);
  if (x <= -1.0 || x >= 1.0) return right;
  const double left = sspnp::model::fixed_charge_at(profile, std::nextafter(x, -2.0));
  return 0.5 * (left + right);
}

/// `guess(x)` returns (phi, c_1..c_M) at x; fluxes start at zero.
inline FdSolution solve_v2i_fd(const sspnp::model::ChannelSystem& sys, double voltage, int points,
                               const std::function<Eigen::VectorXd(double)>& guess) {
  const int m = static_cast<int>(sys.species.size());
  const int k_last = points - 1;
  const double h = 2.0 / k_last;
  // Unknown layout: phi_0..phi_K, then c_i nodes per species, then J_i.
  const int nodes = points;
  const int size = nodes * (m + 1) + m;
  auto phi_idx = [](int k) { return k; };
  auto c_idx = [nodes](int i, int k) { return nodes * (i + 1) + k; };
  auto j_idx = [nodes, m](int i) { return nodes * (m + 1) + i; };

  FdSolution out;
  out.x.resize(nodes);
  std::vector<double> rho(nodes);
  for (int k = 0; k < nodes; ++k) {
    out.x[k] = k == k_last ? 1.0 : -1.0 + k * h;
    rho[k] = node_charge(sys.profile, out.x[k]);
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(size);
  for (int k = 0; k < nodes; ++k) {
    const Eigen::VectorXd g = guess(out.x[k]);
    u[phi_idx(k)] = g[0];
    for (int i = 0; i < m; ++i) u[c_idx(i, k)] = g[1 + i];
  }

  for (int iter = 1; iter <= 50; ++iter) {
    Eigen::VectorXd f(size);
    std::vector<Eigen::Triplet<double>> t;
    int row = 0;
    f[row] = u[phi_idx(0)];
    t.emplace_back(row++, phi_idx(0), 1.0);
    for (int k = 1; k < k_last; ++k) {
      double charge = rho[k];
      for (int i = 0; i < m; ++i) charge += sys.species[i].valence * u[c_idx(i, k)];
      f[row] = (u[phi_idx(k + 1)] - 2.0 * u[phi_idx(k)] + u[phi_idx(k - 1)]) / (h * h) + sys.kappa * charge;
      t.emplace_back(row, phi_idx(k + 1), 1.0 / (h * h));
      t.emplace_back(row, phi_idx(k), -2.0 / (h * h));
      t.emplace_back(row, phi_idx(k - 1), 1.0 / (h * h));
      for (int i = 0; i < m; ++i) t.emplace_back(row, c_idx(i, k), sys.kappa * sys.species[i].valence);
      ++row;
    }
    f[row] = u[phi_idx(k_last)] - voltage;
    t.emplace_back(row++, phi_idx(k_last), 1.0);

    for (int i = 0; i < m; ++i) {
      const double z = sys.species[i].valence;
      f[row] = u[c_idx(i, 0)] - sys.species[i].c_left;
      t.emplace_back(row++, c_idx(i, 0), 1.0);
      for (int k = 0; k < k_last; ++k) {
        const double c0 = u[c_idx(i, k)], c1 = u[c_idx(i, k + 1)];
        const double dphi = (u[phi_idx(k + 1)] - u[phi_idx(k)]) / h;
        f[row] = (c1 - c0) / h + z * 0.5 * (c0 + c1) * dphi - u[j_idx(i)];
        t.emplace_back(row, c_idx(i, k + 1), 1.0 / h + 0.5 * z * dphi);
        t.emplace_back(row, c_idx(i, k), -1.0 / h + 0.5 * z * dphi);
        t.emplace_back(row, phi_idx(k + 1), z * 0.5 * (c0 + c1) / h);
        t.emplace_back(row, phi_idx(k), -z * 0.5 * (c0 + c1) / h);
        t.emplace_back(row, j_idx(i), -1.0);
        ++row;
      }
      f[row] = u[c_idx(i, k_last)] - sys.species[i].c_right;
      t.emplace_back(row++, c_idx(i, k_last), 1.0);
    }

    Eigen::SparseMatrix<double> a(size, size);
    a.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("oracle: singular Jacobian");
    const Eigen::VectorXd step = lu.solve(f);
    u -= step;
    out.iterations = iter;
    if (step.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + u.lpNorm<Eigen::Infinity>())) break;
    if (iter == 50) throw std::runtime_error("oracle: Newton did not converge");
  }

  out.phi = u.head(nodes);
  for (int i = 0; i < m; ++i) {
    out.c.push_back(u.segment(c_idx(i, 0), nodes));
    out.flux.push_back(u[j_idx(i)]);
  }
  return out;
}

}  // namespace oracle
