#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sspnp/errors.hpp"

namespace sspnp::bvp {

/// LU factorization with partial pivoting of a square band matrix with
/// `kl` sub- and `ku` super-diagonals. Storage follows the LAPACK band layout
/// with `kl` extra rows reserved for pivoting fill-in.
template <typename Scalar>
class BandedLU {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BandedLU(Index n, Index kl, Index ku)
      : n_(n), kl_(kl), ku_(ku), band_(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(2 * kl + ku + 1, n)),
        pivots_(static_cast<std::size_t>(n)) {}

  Index size() const { return n_; }
  Index lower() const { return kl_; }
  Index upper() const { return ku_; }

  /// Whether (row, col) lies inside the declared band.
  bool in_band(Index row, Index col) const { return row - col <= kl_ && col - row <= ku_; }

  /// Element access in full-matrix coordinates. Only valid inside the band
  /// (before factorization) or inside the widened band (after).
  Scalar& operator()(Index row, Index col) { return band_(kl_ + ku_ + row - col, col); }
  Scalar operator()(Index row, Index col) const { return band_(kl_ + ku_ + row - col, col); }

  void factorize() {
    Index ju = 0;
    auto& a = *this;
    for (Index j = 0; j < n_; ++j) {
      const Index km = std::min(kl_, n_ - 1 - j);
      Index p = j;
      Scalar best = std::abs(a(j, j));
      for (Index i = j + 1; i <= j + km; ++i) {
        if (std::abs(a(i, j)) > best) {
          best = std::abs(a(i, j));
          p = i;
        }
      }
      pivots_[static_cast<std::size_t>(j)] = p;
      if (!(best > Scalar(0)) || !std::isfinite(static_cast<double>(best))) {
        throw SingularJacobian("banded LU: zero pivot in column " + std::to_string(j));
      }
      ju = std::max(ju, std::min(p + ku_, n_ - 1));
      if (p != j) {
        for (Index c = j; c <= ju; ++c) std::swap(a(p, c), a(j, c));
      }
      if (km > 0) {
        const Scalar inv = Scalar(1) / a(j, j);
        for (Index i = j + 1; i <= j + km; ++i) a(i, j) *= inv;
        for (Index c = j + 1; c <= ju; ++c) {
          const Scalar t = a(j, c);
          if (t == Scalar(0)) continue;
          for (Index i = j + 1; i <= j + km; ++i) a(i, c) -= a(i, j) * t;
        }
      }
    }
  }

  /// In-place solve of A x = b using the stored factors.
  void solve_in_place(Eigen::Ref<Vector> b) const {
    const Index kv = kl_ + ku_;
    const auto& a = *this;
    for (Index j = 0; j + 1 < n_; ++j) {
      const Index km = std::min(kl_, n_ - 1 - j);
      const Index p = pivots_[static_cast<std::size_t>(j)];
      if (p != j) std::swap(b[p], b[j]);
      const Scalar bj = b[j];
      if (bj == Scalar(0)) continue;
      for (Index i = j + 1; i <= j + km; ++i) b[i] -= a(i, j) * bj;
    }
    for (Index j = n_ - 1; j >= 0; --j) {
      b[j] /= a(j, j);
      const Scalar bj = b[j];
      if (bj == Scalar(0)) continue;
      for (Index i = std::max<Index>(0, j - kv); i < j; ++i) b[i] -= a(i, j) * bj;
    }
  }

  Vector solve(const Vector& b) const {
    Vector x = b;
    solve_in_place(x);
    return x;
  }

 private:
  Index n_;
  Index kl_;
  Index ku_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> band_;
  std::vector<Index> pivots_;
};

}  // namespace sspnp::bvp
