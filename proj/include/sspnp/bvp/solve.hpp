#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "sspnp/bvp/banded_lu.hpp"
#include "sspnp/bvp/bvp_spec.hpp"
#include "sspnp/bvp/mesh.hpp"
#include "sspnp/bvp/solution.hpp"
#include "sspnp/errors.hpp"

namespace sspnp::bvp {

namespace detail {

using Eigen::Index;

// Interior Lobatto points of the 5-point rule on [0, 1]; the collocation
// residual vanishes at the other three (ends and midpoint).
inline constexpr double kLobattoOffset = 0.32732683535398857;  // sqrt(21)/14
inline constexpr double kLobattoWeight = 49.0 / 180.0;

template <typename Scalar>
bool is_interface(const std::vector<Scalar>& sorted_interfaces, Scalar x) {
  return std::binary_search(sorted_interfaces.begin(), sorted_interfaces.end(), x);
}

/// Rows of the boundary conditions split by which end they touch.
struct BcLayout {
  std::vector<Index> left_rows;
  std::vector<Index> right_rows;
  bool separated = true;
};

template <typename Scalar>
BcLayout classify_bcs(const BcJacobians<Scalar>& jac) {
  BcLayout layout;
  for (Index r = 0; r < jac.left.rows(); ++r) {
    const bool touches_left = (jac.left.row(r).array() != Scalar(0)).any();
    const bool touches_right = (jac.right.row(r).array() != Scalar(0)).any();
    if (touches_left && touches_right) layout.separated = false;
    if (touches_right && !touches_left) {
      layout.right_rows.push_back(r);
    } else {
      layout.left_rows.push_back(r);
    }
  }
  if (!layout.separated) {
    layout.left_rows.clear();
    layout.right_rows.clear();
    for (Index r = 0; r < jac.left.rows(); ++r) layout.left_rows.push_back(r);
  }
  return layout;
}

/// Discrete Lobatto IIIA system on a fixed mesh.
template <typename Scalar>
class Collocation {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  Collocation(const BvpSpec<Scalar>& spec, const Mesh<Scalar>& mesh)
      : spec_(spec), mesh_(mesh), n_(spec.dimension), interfaces_(spec.interface_points) {
    std::sort(interfaces_.begin(), interfaces_.end());
  }

  Index dimension() const { return n_; }
  Index unknowns() const { return n_ * static_cast<Index>(mesh_.size()); }
  const Mesh<Scalar>& mesh() const { return mesh_; }

  /// Abscissa at which the left (right) end of `interval` samples the rhs.
  Scalar left_abscissa(std::size_t interval) const {
    const Scalar x = mesh_[interval];
    return is_interface(interfaces_, x) ? std::nextafter(x, Scalar(2)) : x;
  }
  Scalar right_abscissa(std::size_t interval) const {
    const Scalar x = mesh_[interval + 1];
    return is_interface(interfaces_, x) ? std::nextafter(x, Scalar(-2)) : x;
  }

  BcLayout bc_layout(const Matrix& y) const {
    return classify_bcs(spec_.bc_jacobians(y.col(0), y.col(y.cols() - 1)));
  }

  struct Slopes {
    Matrix left;   // n x N
    Matrix right;  // n x N
  };

  Slopes slopes(const Matrix& y) const {
    const std::size_t intervals = mesh_.intervals();
    Slopes s{Matrix(n_, static_cast<Index>(intervals)), Matrix(n_, static_cast<Index>(intervals))};
    for (std::size_t k = 0; k < intervals; ++k) {
      const auto j = static_cast<Index>(k);
      if (k > 0 && !is_interface(interfaces_, mesh_[k])) {
        s.left.col(j) = s.right.col(j - 1);
      } else {
        s.left.col(j) = spec_.rhs(left_abscissa(k), y.col(j));
      }
      s.right.col(j) = spec_.rhs(right_abscissa(k), y.col(j + 1));
    }
    return s;
  }

  /// Equation residual in solver row order: left BCs, one block per interval,
  /// right BCs.
  Vector residual(const Matrix& y, const BcLayout& layout) const {
    const std::size_t intervals = mesh_.intervals();
    const Index p = static_cast<Index>(layout.left_rows.size());
    Vector out(unknowns());
    const Vector bc = spec_.bc_residual(y.col(0), y.col(y.cols() - 1));
    if (bc.size() != n_) throw DimensionMismatch("bc_residual must have `dimension` components");
    for (Index r = 0; r < p; ++r) out[r] = bc[layout.left_rows[static_cast<std::size_t>(r)]];
    const Slopes s = slopes(y);
    for (std::size_t k = 0; k < intervals; ++k) {
      const auto j = static_cast<Index>(k);
      const Scalar h = mesh_.width(k);
      const Scalar xm = mesh_[k] + h / Scalar(2);
      const Vector ym = (y.col(j) + y.col(j + 1)) / Scalar(2) - (h / Scalar(8)) * (s.right.col(j) - s.left.col(j));
      const Vector fm = spec_.rhs(xm, ym);
      out.segment(p + j * n_, n_) =
          y.col(j + 1) - y.col(j) - (h / Scalar(6)) * (s.left.col(j) + Scalar(4) * fm + s.right.col(j));
    }
    const Index base = p + static_cast<Index>(intervals) * n_;
    for (std::size_t r = 0; r < layout.right_rows.size(); ++r) {
      out[base + static_cast<Index>(r)] = bc[layout.right_rows[r]];
    }
    return out;
  }

  /// Calls sink(row, col, value) for every structural entry of the Newton matrix.
  template <typename Sink>
  void jacobian(const Matrix& y, const BcLayout& layout, Sink&& sink) const {
    const std::size_t intervals = mesh_.intervals();
    const Index p = static_cast<Index>(layout.left_rows.size());
    const Index last = static_cast<Index>(intervals) * n_;
    const BcJacobians<Scalar> bcj = spec_.bc_jacobians(y.col(0), y.col(y.cols() - 1));
    auto emit_bc = [&](Index row, Index r) {
      for (Index c = 0; c < n_; ++c) {
        if (bcj.left(r, c) != Scalar(0)) sink(row, c, bcj.left(r, c));
        if (bcj.right(r, c) != Scalar(0)) sink(row, last + c, bcj.right(r, c));
      }
    };
    for (Index r = 0; r < p; ++r) emit_bc(r, layout.left_rows[static_cast<std::size_t>(r)]);

    const Matrix eye = Matrix::Identity(n_, n_);
    const Slopes s = slopes(y);
    Matrix jl;
    for (std::size_t k = 0; k < intervals; ++k) {
      const auto j = static_cast<Index>(k);
      const Scalar h = mesh_.width(k);
      const Scalar xm = mesh_[k] + h / Scalar(2);
      if (k == 0 || is_interface(interfaces_, mesh_[k])) {
        jl = spec_.rhs_jacobian(left_abscissa(k), y.col(j));
      }
      const Matrix jr = spec_.rhs_jacobian(right_abscissa(k), y.col(j + 1));
      const Vector ym = (y.col(j) + y.col(j + 1)) / Scalar(2) - (h / Scalar(8)) * (s.right.col(j) - s.left.col(j));
      const Matrix jm = spec_.rhs_jacobian(xm, ym);
      const Matrix d_left = -eye - (h / Scalar(6)) * (jl + Scalar(4) * jm * (eye / Scalar(2) + (h / Scalar(8)) * jl));
      const Matrix d_right = eye - (h / Scalar(6)) * (jr + Scalar(4) * jm * (eye / Scalar(2) - (h / Scalar(8)) * jr));
      const Index row0 = p + j * n_;
      for (Index r = 0; r < n_; ++r) {
        for (Index c = 0; c < n_; ++c) {
          if (d_left(r, c) != Scalar(0)) sink(row0 + r, j * n_ + c, d_left(r, c));
          if (d_right(r, c) != Scalar(0)) sink(row0 + r, (j + 1) * n_ + c, d_right(r, c));
        }
      }
      jl = jr;
    }
    const Index base = p + last;
    for (std::size_t r = 0; r < layout.right_rows.size(); ++r) {
      emit_bc(base + static_cast<Index>(r), layout.right_rows[r]);
    }
  }

 private:
  const BvpSpec<Scalar>& spec_;
  const Mesh<Scalar>& mesh_;
  Index n_;
  std::vector<Scalar> interfaces_;
};

/// Factorized Newton matrix: banded LU when the boundary conditions are
/// separated, sparse LU otherwise.
template <typename Scalar>
class NewtonMatrix {
 public:
  using Vector = VectorX<Scalar>;

  template <typename Sys>
  NewtonMatrix(const Sys& system, const MatrixX<Scalar>& y, const BcLayout& layout) {
    const Index n = system.dimension();
    const Index size = system.unknowns();
    if (layout.separated) {
      const Index p = static_cast<Index>(layout.left_rows.size());
      banded_ = std::make_unique<BandedLU<Scalar>>(size, p + n - 1, 2 * n - 1 - p);
      auto& band = *banded_;
      system.jacobian(y, layout, [&band](Index r, Index c, Scalar v) { band(r, c) += v; });
      banded_->factorize();
    } else {
      std::vector<Eigen::Triplet<Scalar>> triplets;
      system.jacobian(y, layout, [&triplets](Index r, Index c, Scalar v) { triplets.emplace_back(r, c, v); });
      Eigen::SparseMatrix<Scalar> a(size, size);
      a.setFromTriplets(triplets.begin(), triplets.end());
      sparse_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<Scalar>>>();
      sparse_->compute(a);
      if (sparse_->info() != Eigen::Success) throw SingularJacobian("sparse LU failed on collocation system");
    }
  }

  Vector solve(const Vector& b) const {
    if (banded_) return banded_->solve(b);
    Vector x = sparse_->solve(b);
    return x;
  }

 private:
  std::unique_ptr<BandedLU<Scalar>> banded_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<Scalar>>> sparse_;
};

template <typename Scalar>
Scalar weighted_norm(const VectorX<Scalar>& step, const VectorX<Scalar>& y) {
  Scalar out(0);
  for (Index i = 0; i < step.size(); ++i) {
    out = std::max(out, std::abs(step[i]) / (Scalar(1) + std::abs(y[i])));
  }
  return out;
}

template <typename Scalar>
bool all_finite(const VectorX<Scalar>& v) {
  return v.allFinite();
}

/// Damped Newton with natural monotonicity: a step fraction lambda is
/// accepted when the simplified correction at the trial point shrinks by the
/// factor (1 - lambda / 4). Returns the number of Jacobian factorizations.
template <typename Scalar>
int newton(const Collocation<Scalar>& system, MatrixX<Scalar>& y, const SolverSettings& settings) {
  using Vector = VectorX<Scalar>;
  const Index size = system.unknowns();
  Eigen::Map<Vector> flat(y.data(), size);
  for (int iter = 1; iter <= settings.max_newton_iters; ++iter) {
    const BcLayout layout = system.bc_layout(y);
    const Vector f = system.residual(y, layout);
    if (!all_finite(f)) throw NonConvergence("non-finite collocation residual");
    const NewtonMatrix<Scalar> jac(system, y, layout);
    const Vector step = -jac.solve(f);
    if (!all_finite(step)) throw SingularJacobian("non-finite Newton correction");
    const Vector y0 = flat;
    const Scalar step_norm = weighted_norm<Scalar>(step, y0);
    if (step_norm <= Scalar(settings.newton_tol)) {
      flat = y0 + step;
      return iter;
    }
    Scalar lambda(1);
    for (;;) {
      flat = y0 + lambda * step;
      const Vector ft = system.residual(y, layout);
      if (all_finite(ft)) {
        const Vector simplified = -jac.solve(ft);
        const Scalar trial_norm = weighted_norm<Scalar>(simplified, y0);
        if (std::isfinite(static_cast<double>(trial_norm)) &&
            trial_norm <= (Scalar(1) - lambda / Scalar(4)) * step_norm) {
          if (lambda == Scalar(1) && trial_norm <= Scalar(settings.newton_tol)) {
            flat += simplified;
            return iter;
          }
          break;
        }
      }
      lambda /= Scalar(2);
      if (lambda < Scalar(settings.damping_min)) {
        flat = y0;
        throw NonConvergence("Newton damping exhausted after " + std::to_string(iter) + " iterations");
      }
    }
  }
  throw NonConvergence("Newton iteration cap reached");
}

}  // namespace detail

/// Assembles a solution record (slopes included) from node values on `mesh`.
template <typename Scalar>
BvpSolution<Scalar> make_solution(const BvpSpec<Scalar>& spec, const Mesh<Scalar>& mesh, MatrixX<Scalar> values) {
  if (values.rows() != spec.dimension || values.cols() != static_cast<Eigen::Index>(mesh.size())) {
    throw DimensionMismatch("node values do not match spec dimension and mesh size");
  }
  const detail::Collocation<Scalar> system(spec, mesh);
  auto slopes = system.slopes(values);
  BvpSolution<Scalar> out;
  out.mesh = mesh;
  out.values = std::move(values);
  out.slope_left = std::move(slopes.left);
  out.slope_right = std::move(slopes.right);
  return out;
}

/// One nonnegative number per mesh interval: the RMS over the interval of the
/// scaled defect |Y'_interp - f(x, Y_interp)| / (1 + (rel_tol/abs_tol) |f|),
/// evaluated with 5-point Lobatto quadrature. An interval meets tolerance when
/// its value is <= abs_tol.
template <typename Scalar>
std::vector<Scalar> estimate_residual(const BvpSolution<Scalar>& solution, const BvpSpec<Scalar>& spec,
                                      const SolverSettings& settings = {}) {
  using Vector = VectorX<Scalar>;
  const auto& mesh = solution.mesh;
  const Scalar ratio = Scalar(settings.rel_tol / settings.abs_tol);
  std::vector<Scalar> out(mesh.intervals(), Scalar(0));
  for (std::size_t k = 0; k < mesh.intervals(); ++k) {
    const Scalar h = mesh.width(k);
    Scalar acc(0);
    for (const double offset : {-detail::kLobattoOffset, detail::kLobattoOffset}) {
      const Scalar x = mesh[k] + h * (Scalar(0.5) + Scalar(offset));
      const Vector y = solution(x);
      const Vector f = spec.rhs(x, y);
      const Vector r = solution.derivative(x) - f;
      const Vector e = r.cwiseAbs().array() / (Scalar(1) + ratio * f.cwiseAbs().array());
      acc += Scalar(detail::kLobattoWeight) * e.cwiseAbs2().maxCoeff();
    }
    out[k] = std::sqrt(acc);
  }
  return out;
}

/// Splits every interval whose residual exceeds `tol` into two (three when it
/// exceeds 100 tol). When anything is split, neighbouring interval pairs whose
/// residuals are both below coarsen_ratio * tol are merged. Interface nodes
/// are never removed. Returns the mesh unchanged when nothing exceeds `tol`.
template <typename Scalar>
Mesh<Scalar> refine_mesh(const Mesh<Scalar>& mesh, const std::vector<Scalar>& residuals, Scalar tol,
                         std::size_t max_points = 10000, Scalar coarsen_ratio = Scalar(0)) {
  if (residuals.size() != mesh.intervals()) throw DimensionMismatch("one residual per mesh interval required");
  const bool refine = std::any_of(residuals.begin(), residuals.end(), [tol](Scalar r) { return r > tol; });
  if (!refine) return mesh;
  const Scalar small = coarsen_ratio * tol;
  std::vector<Scalar> nodes{mesh[0]};
  nodes.reserve(2 * mesh.size());
  std::size_t k = 0;
  while (k < mesh.intervals()) {
    const Scalar r = residuals[k];
    if (r > tol) {
      const int parts = r > Scalar(100) * tol ? 3 : 2;
      const Scalar h = mesh.width(k);
      for (int q = 1; q < parts; ++q) nodes.push_back(mesh[k] + h * Scalar(q) / Scalar(parts));
      nodes.push_back(mesh[k + 1]);
      ++k;
    } else if (k + 1 < mesh.intervals() && r < small && residuals[k + 1] < small && !mesh.is_interface(mesh[k + 1])) {
      nodes.push_back(mesh[k + 2]);
      k += 2;
    } else {
      nodes.push_back(mesh[k + 1]);
      ++k;
    }
  }
  if (nodes.size() > max_points) {
    throw MeshBudgetExceeded("mesh refinement needs " + std::to_string(nodes.size()) + " points (cap " +
                             std::to_string(max_points) + ")");
  }
  return Mesh<Scalar>(std::move(nodes), mesh.interfaces());
}

/// Samples `solution` on the nodes of `mesh`.
template <typename Scalar>
MatrixX<Scalar> resample(const BvpSolution<Scalar>& solution, const Mesh<Scalar>& mesh) {
  MatrixX<Scalar> out(solution.dimension(), static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t k = 0; k < mesh.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = solution(mesh[k]);
  return out;
}

/// Solves the BVP by Lobatto IIIA collocation starting from node values
/// `guess` on `mesh`. The spec's interface points are inserted into the mesh
/// if missing (guess values there are linearly interpolated).
template <typename Scalar>
BvpSolution<Scalar> solve_bvp(const BvpSpec<Scalar>& spec, const Mesh<Scalar>& initial_mesh, const MatrixX<Scalar>& guess,
                              const SolverSettings& settings = {}) {
  settings.validate();
  if (guess.rows() != spec.dimension || guess.cols() != static_cast<Eigen::Index>(initial_mesh.size())) {
    throw DimensionMismatch("guess does not match spec dimension and mesh size");
  }
  Mesh<Scalar> mesh(initial_mesh.nodes(), spec.interface_points);
  MatrixX<Scalar> y(spec.dimension, static_cast<Eigen::Index>(mesh.size()));
  if (mesh.size() == initial_mesh.size()) {
    y = guess;
  } else {
    for (std::size_t k = 0; k < mesh.size(); ++k) {
      const std::size_t i = initial_mesh.locate(mesh[k]);
      const Scalar t = (mesh[k] - initial_mesh[i]) / initial_mesh.width(i);
      const auto a = static_cast<Eigen::Index>(i);
      y.col(static_cast<Eigen::Index>(k)) = (Scalar(1) - t) * guess.col(a) + t * guess.col(a + 1);
    }
  }
  if (mesh.size() > settings.max_mesh_points) throw MeshBudgetExceeded("initial mesh exceeds max_mesh_points");

  int iterations = 0;
  for (int pass = 0; pass <= settings.max_refinements; ++pass) {
    {
      const detail::Collocation<Scalar> system(spec, mesh);
      iterations += detail::newton(system, y, settings);
    }
    BvpSolution<Scalar> solution = make_solution(spec, mesh, y);
    solution.newton_iterations = iterations;
    const std::vector<Scalar> residuals = estimate_residual(solution, spec, settings);
    solution.residual_norm = residuals.empty() ? Scalar(0) : *std::max_element(residuals.begin(), residuals.end());
    if (!settings.adapt_mesh || solution.residual_norm <= Scalar(settings.abs_tol)) return solution;
    mesh = refine_mesh(mesh, residuals, Scalar(settings.abs_tol), settings.max_mesh_points, Scalar(settings.coarsen_ratio));
    y = resample(solution, mesh);
  }
  throw NonConvergence("residual control did not settle within max_refinements passes");
}

/// Continuation entry point: reuses the previous solution's mesh and values.
template <typename Scalar>
BvpSolution<Scalar> solve_bvp(const BvpSpec<Scalar>& spec, const BvpSolution<Scalar>& guess,
                              const SolverSettings& settings = {}) {
  return solve_bvp(spec, guess.mesh, guess.values, settings);
}

/// Default initial mesh: 101 uniform nodes unioned with the interface points.
template <typename Scalar>
Mesh<Scalar> initial_mesh(const BvpSpec<Scalar>& spec, std::size_t intervals = 100) {
  return Mesh<Scalar>::uniform(intervals, spec.interface_points);
}

/// Solves from a guess function sampled on the default initial mesh.
template <typename Scalar>
BvpSolution<Scalar> solve_bvp(const BvpSpec<Scalar>& spec, const std::function<VectorX<Scalar>(Scalar)>& guess,
                              const SolverSettings& settings = {}) {
  const Mesh<Scalar> mesh = initial_mesh(spec);
  MatrixX<Scalar> values(spec.dimension, static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t k = 0; k < mesh.size(); ++k) values.col(static_cast<Eigen::Index>(k)) = guess(mesh[k]);
  return solve_bvp(spec, mesh, values, settings);
}

}  // namespace sspnp::bvp
