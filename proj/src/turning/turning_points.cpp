#include "sspnp/turning/turning_points.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sspnp/bvp/solve.hpp"
#include "sspnp/model/ivaug.hpp"

namespace sspnp::turning {

namespace {

using continuation::response;

std::optional<std::size_t> nearest_candidate(const std::vector<TurningCandidate>& candidates, const Branch& branch,
                                             double current) {
  std::optional<std::size_t> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double d = std::abs(branch.points[candidates[c].seed].I - current);
    if (d < best_distance) {
      best_distance = d;
      best = c;
    }
  }
  return best;
}

bool same_fold(const TurningPoint& a, const TurningPoint& b) {
  const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-4 * std::max({1.0, std::abs(x), std::abs(y)}); };
  return close(a.V_star, b.V_star) && close(a.I_star, b.I_star);
}

}  // namespace

std::vector<TurningCandidate> estimate_turning_candidates(const Branch& branch) {
  const auto& pts = branch.points;
  if (pts.size() < 3) throw TooFewPoints("turning-point candidates need at least 3 trace points");
  std::vector<TurningCandidate> out;
  int last_sign = 0;
  std::size_t last_index = 0;  // right end of the last nonzero increment
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double d = response(pts[k + 1]) - response(pts[k]);
    if (d == 0.0) continue;
    const int sign = d > 0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) {
      const std::size_t seed = last_index;
      out.push_back(TurningCandidate{seed, seed - 1, std::min(seed + 1, pts.size() - 1),
                                     last_sign > 0 ? FoldKind::Maximum : FoldKind::Minimum});
    }
    last_sign = sign;
    last_index = k + 1;
  }
  return out;
}

TurningPoint solve_turning_point(const model::ChannelSystem& system, const Branch& branch, std::size_t seed_index,
                                 const bvp::SolverSettings& settings) {
  const auto& pts = branch.points;
  if (pts.size() < 3) throw TooFewPoints("turning-point seeding needs at least 3 trace points");
  if (seed_index >= pts.size()) throw OutOfDomain("seed index outside the branch");
  const std::size_t before = seed_index == 0 ? 0 : seed_index - 1;
  const std::size_t after = std::min(seed_index + 1, pts.size() - 1);
  const auto& seed = pts[seed_index];
  const auto& lo = *pts[before].solution;
  const auto& hi = *pts[after].solution;
  const double di = pts[after].I - pts[before].I;
  if (di == 0.0) throw NonConvergence("bracketing trace points share the same current");

  const auto& mesh = seed.solution->mesh;
  const model::AugmentedLayout at{system.species_count()};
  Eigen::MatrixXd guess(at.dimension(), static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const Eigen::VectorXd dy = (bvp::evaluate(hi, mesh[k]) - bvp::evaluate(lo, mesh[k])) / di;
    guess.col(static_cast<Eigen::Index>(k)) = model::to_augmented(system, seed.solution->node(k), dy);
  }
  auto solution = bvp::solve_bvp(model::build_ivaug(system, 0.0), mesh, guess, settings);

  for (std::size_t i = 0; i < system.species_count(); ++i) {
    if (solution.values.row(at.concentration(i)).minCoeff() <= 0.0) {
      throw NonConvergence("augmented solve reached a state with nonpositive concentration");
    }
  }

  TurningPoint fold;
  fold.V_star = solution.right()[at.potential()];
  fold.I_star = solution.left()[at.current()];
  fold.seed_origin = seed_index;
  fold.residual = solution.residual_norm;
  fold.solution = std::make_shared<const continuation::Solution>(std::move(solution));

  const auto candidates = estimate_turning_candidates(branch);
  const auto own = nearest_candidate(candidates, branch, seed.I);
  const auto landed = nearest_candidate(candidates, branch, fold.I_star);
  if (!own) {
    throw ConvergedToWrongFold("trace has no sign change, yet a fold was found", fold);
  }
  fold.kind = candidates[*landed].kind;
  if (*landed != *own) {
    throw ConvergedToWrongFold("seed at I = " + std::to_string(seed.I) + " converged to the fold at I = " +
                                   std::to_string(fold.I_star),
                               fold);
  }
  return fold;
}

TurningPointReport find_all_turning_points(const model::ChannelSystem& system, const Branch& branch,
                                           const bvp::SolverSettings& settings) {
  TurningPointReport report;
  const auto candidates = estimate_turning_candidates(branch);
  const auto n = static_cast<long>(branch.points.size());
  for (const auto& candidate : candidates) {
    bool yielded = false;
    const auto s = static_cast<long>(candidate.seed);
    for (long offset : {0L, -1L, 1L, -2L, 2L}) {
      const long index = s + offset;
      if (index < 0 || index >= n) continue;
      try {
        report.folds.push_back(solve_turning_point(system, branch, static_cast<std::size_t>(index), settings));
        yielded = true;
        break;
      } catch (const ConvergedToWrongFold& e) {
        report.folds.push_back(e.fold());
        report.warnings.push_back(e.what());
        yielded = true;
      } catch (const NonConvergence& e) {
        report.warnings.push_back("seed " + std::to_string(index) + ": " + e.what());
      } catch (const MeshBudgetExceeded& e) {
        report.warnings.push_back("seed " + std::to_string(index) + ": " + e.what());
      }
    }
    if (!yielded) {
      throw NonConvergence("no fold found near trace point " + std::to_string(candidate.seed));
    }
  }

  std::sort(report.folds.begin(), report.folds.end(),
            [](const TurningPoint& a, const TurningPoint& b) { return a.V_star < b.V_star; });
  std::vector<TurningPoint> unique;
  for (auto& f : report.folds) {
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const TurningPoint& u) { return same_fold(u, f); });
    if (!seen) unique.push_back(std::move(f));
  }
  report.folds = std::move(unique);
  return report;
}

MultiplicityMap multiplicity_intervals(const std::vector<TurningPoint>& folds, const Branch* branch) {
  if (folds.size() % 2 != 0) {
    throw OddFoldCount("fold list has odd length " + std::to_string(folds.size()));
  }
  std::vector<TurningPoint> sorted = folds;
  std::sort(sorted.begin(), sorted.end(),
            [](const TurningPoint& a, const TurningPoint& b) { return a.V_star < b.V_star; });

  MultiplicityMap map;
  const double inf = std::numeric_limits<double>::infinity();
  double low = -inf;
  int count = 1;
  for (const auto& f : sorted) {
    map.fold_voltages.push_back(f.V_star);
    map.intervals.push_back(MultiplicityInterval{low, f.V_star, count, std::nullopt});
    count += f.kind == FoldKind::Minimum ? 2 : -2;
    if (count < 1) throw OddFoldCount("fold kinds are inconsistent with a curve starting and ending on one branch");
    low = f.V_star;
  }
  map.intervals.push_back(MultiplicityInterval{low, inf, count, std::nullopt});
  if (count != 1) throw OddFoldCount("fold kinds do not return the count to 1");

  if (branch) {
    for (auto& interval : map.intervals) {
      if (!std::isfinite(interval.v_low) || !std::isfinite(interval.v_high)) continue;
      const double probe = 0.5 * (interval.v_low + interval.v_high);
      interval.trace_count = static_cast<int>(continuation::crossings(*branch, probe).size());
    }
  }
  return map;
}

}  // namespace sspnp::turning
