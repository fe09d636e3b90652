#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "sspnp/bvp/bvp_spec.hpp"
#include "sspnp/bvp/mesh.hpp"

namespace sspnp::bvp {

/// Converged collocation solution: node values plus one-sided end slopes per
/// interval. Inside each interval the interpolant is the cubic Hermite
/// polynomial through (y_j, y_j') and (y_{j+1}, y_{j+1}'), which is the
/// Lobatto IIIA collocation polynomial. It is C^1 except at interface nodes,
/// where only Y' may jump.
template <typename Scalar>
struct BvpSolution {
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  Mesh<Scalar> mesh;
  Matrix values;       // dimension x nodes
  Matrix slope_left;   // dimension x intervals, Y' at the left end of each interval
  Matrix slope_right;  // dimension x intervals, Y' at the right end of each interval
  Scalar residual_norm = Scalar(0);
  int newton_iterations = 0;

  Eigen::Index dimension() const { return values.rows(); }
  Vector left() const { return values.col(0); }
  Vector right() const { return values.col(values.cols() - 1); }
  Vector node(std::size_t k) const { return values.col(static_cast<Eigen::Index>(k)); }

  Vector operator()(Scalar x) const { return interpolate(x, false); }
  Vector derivative(Scalar x) const { return interpolate(x, true); }

 private:
  Vector interpolate(Scalar x, bool derivative) const {
    const std::size_t k = mesh.locate(x);
    const auto j = static_cast<Eigen::Index>(k);
    if (!derivative) {
      if (x == mesh[k]) return values.col(j);
      if (x == mesh[k + 1]) return values.col(j + 1);
    }
    const Scalar h = mesh.width(k);
    const Scalar t = (x - mesh[k]) / h;
    const auto y0 = values.col(j);
    const auto y1 = values.col(j + 1);
    const auto f0 = slope_left.col(j);
    const auto f1 = slope_right.col(j);
    if (derivative) {
      const Scalar d00 = Scalar(6) * t * t - Scalar(6) * t;
      const Scalar d10 = Scalar(3) * t * t - Scalar(4) * t + Scalar(1);
      const Scalar d11 = Scalar(3) * t * t - Scalar(2) * t;
      return (d00 / h) * (y0 - y1) + d10 * f0 + d11 * f1;
    }
    const Scalar t2 = t * t;
    const Scalar t3 = t2 * t;
    const Scalar h00 = Scalar(2) * t3 - Scalar(3) * t2 + Scalar(1);
    const Scalar h01 = Scalar(1) - h00;
    const Scalar h10 = t3 - Scalar(2) * t2 + t;
    const Scalar h11 = t3 - t2;
    return h00 * y0 + h01 * y1 + h * (h10 * f0 + h11 * f1);
  }
};

/// Interpolant value at x; exact at nodes. Throws OutOfDomain outside [-1, 1].
template <typename Scalar>
VectorX<Scalar> evaluate(const BvpSolution<Scalar>& solution, Scalar x) {
  return solution(x);
}

}  // namespace sspnp::bvp
