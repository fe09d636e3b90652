#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sspnp/continuation/continuation.hpp"
#include "sspnp/errors.hpp"

namespace sspnp::turning {

using continuation::Branch;
using continuation::SolutionPtr;

/// Whether V has a local maximum or minimum along the I-ordered curve.
enum class FoldKind { Maximum, Minimum };

struct TurningPoint {
  double V_star = 0.0;
  double I_star = 0.0;
  FoldKind kind = FoldKind::Maximum;
  SolutionPtr solution;  // augmented 4M+3 solution
  std::size_t seed_origin = 0;
  double residual = 0.0;
};

/// The augmented solve converged, but to a fold other than the one the seed
/// bracketed. The fold itself is valid and carried along.
class ConvergedToWrongFold : public Error {
 public:
  ConvergedToWrongFold(const std::string& what, TurningPoint fold) : Error(what), fold_(std::move(fold)) {}
  const TurningPoint& fold() const { return fold_; }

 private:
  TurningPoint fold_;
};

/// One sign change of the trace's V increments. `seed` is the extremal trace
/// point; `before` and `after` are its neighbours.
struct TurningCandidate {
  std::size_t seed = 0;
  std::size_t before = 0;
  std::size_t after = 0;
  FoldKind kind = FoldKind::Maximum;
};

std::vector<TurningCandidate> estimate_turning_candidates(const Branch& branch);

/// Solves the augmented problem with dV/dI = 0 seeded from branch point
/// `seed_index`; the hat block starts from the difference quotient of its two
/// neighbours. Throws ConvergedToWrongFold when the result lies nearer another
/// candidate of `branch` than the one closest to the seed.
TurningPoint solve_turning_point(const model::ChannelSystem& system, const Branch& branch, std::size_t seed_index,
                                 const bvp::SolverSettings& settings = {});

struct TurningPointReport {
  std::vector<TurningPoint> folds;  // sorted by V
  std::vector<std::string> warnings;
};

/// Every candidate of `branch` is solved (with neighbouring seeds as
/// fallbacks); duplicates within 1e-4 relative in both V and I are merged.
/// Throws NonConvergence if some sign change yields no fold at all.
TurningPointReport find_all_turning_points(const model::ChannelSystem& system, const Branch& branch,
                                           const bvp::SolverSettings& settings = {});

struct MultiplicityInterval {
  double v_low = 0.0;   // -inf for the first interval
  double v_high = 0.0;  // +inf for the last interval
  int count = 1;
  std::optional<int> trace_count;  // trace crossings at the midpoint; interior intervals only
};

struct MultiplicityMap {
  std::vector<double> fold_voltages;
  std::vector<MultiplicityInterval> intervals;
};

/// Applies the fold-crossing rule: moving up in V, the count rises by 2 past
/// a minimum fold and drops by 2 past a maximum. When `branch` is given, the
/// trace crossings at the midpoint of each interior interval are recorded
/// alongside. Throws OddFoldCount for an odd number of folds.
MultiplicityMap multiplicity_intervals(const std::vector<TurningPoint>& folds, const Branch* branch = nullptr);

}  // namespace sspnp::turning
