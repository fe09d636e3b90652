#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sspnp/bvp/solve.hpp"
#include "sspnp/errors.hpp"
#include "sspnp/model/ivaug.hpp"
#include "sspnp/model/ode.hpp"
#include "sspnp/turning/turning_points.hpp"

using namespace sspnp;
using namespace sspnp::turning;
using continuation::CurvePoint;

namespace {

continuation::TraceSpec trace_spec(double current_max) {
  continuation::TraceSpec t;
  t.current_min = 0.0;
  t.current_max = current_max;
  return t;
}

const Branch& two_ion_branch() {
  static const Branch b = [] {
    const auto t = trace_spec(60.0);
    return continuation::trace_curve(model::two_ion_channel(), t, continuation::default_trace_steps(t));
  }();
  return b;
}

const TurningPointReport& two_ion_report() {
  static const TurningPointReport r = find_all_turning_points(model::two_ion_channel(), two_ion_branch());
  return r;
}

Branch synthetic(const std::vector<double>& vs) {
  Branch b;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    CurvePoint p;
    p.I = static_cast<double>(k);
    p.parameter = p.I;
    p.V = vs[k];
    b.points.push_back(p);
  }
  return b;
}

TurningPoint fake_fold(double v, FoldKind kind) {
  TurningPoint f;
  f.V_star = v;
  f.kind = kind;
  return f;
}

// Current at voltage v solved from the I2V problem at current i.
double voltage_at(const model::ChannelSystem& sys, double i, const continuation::Solution& guess) {
  const auto sol = bvp::solve_bvp(model::build_bvp(sys, model::CurrentToVoltage{i}), guess);
  return sol.right()[model::state::kPotential];
}

}  // namespace

TEST(Candidates, OnePerSignChange) {
  const auto four = estimate_turning_candidates(synthetic({0, 2, 1, 3, 2, 4}));
  ASSERT_EQ(four.size(), 4u);
  EXPECT_EQ(four[0].seed, 1u);
  EXPECT_EQ(four[0].kind, FoldKind::Maximum);
  EXPECT_EQ(four[1].seed, 2u);
  EXPECT_EQ(four[1].kind, FoldKind::Minimum);
  EXPECT_EQ(four[0].before, 0u);
  EXPECT_EQ(four[0].after, 2u);

  EXPECT_TRUE(estimate_turning_candidates(synthetic({0, 1, 2, 3})).empty());
  EXPECT_THROW(estimate_turning_candidates(synthetic({0, 1})), TooFewPoints);

  // A flat step does not hide the sign change.
  const auto flat = estimate_turning_candidates(synthetic({0, 2, 2, 1}));
  ASSERT_EQ(flat.size(), 1u);
  EXPECT_EQ(flat[0].seed, 1u);
}

TEST(Candidates, TwoIonTraceHasTwo) {
  const auto c = estimate_turning_candidates(two_ion_branch());
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].kind, FoldKind::Maximum);
  EXPECT_EQ(c[1].kind, FoldKind::Minimum);
}

TEST(TurningPoint, TwoIonFoldsSatisfyTheFoldCondition) {
  const auto sys = model::two_ion_channel();
  const auto& r = two_ion_report();
  ASSERT_EQ(r.folds.size(), 2u);
  EXPECT_LT(r.folds[0].V_star, r.folds[1].V_star);
  const model::AugmentedLayout at{2};
  for (const auto& f : r.folds) {
    const auto& u = *f.solution;
    EXPECT_EQ(u.values.rows(), at.dimension());
    EXPECT_NEAR(u.right()[at.hat_potential()], 0.0, 1e-9);
    EXPECT_NEAR(u.left()[at.hat_potential()], 0.0, 1e-9);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_GT(u.values.row(at.concentration(i)).minCoeff(), 0.0);

    // V is extremal at I*: both neighbours fall on the same side.
    const continuation::Solution base(u.mesh, [&] {
      Eigen::MatrixXd y(sys.state_dimension(), u.values.cols());
      for (Eigen::Index k = 0; k < y.cols(); ++k) y.col(k) = model::base_state(sys, u.values.col(k));
      return y;
    }());
    const double delta = 1e-2 * std::abs(f.I_star);
    const double below = voltage_at(sys, f.I_star - delta, base) - f.V_star;
    const double above = voltage_at(sys, f.I_star + delta, base) - f.V_star;
    if (f.kind == FoldKind::Maximum) {
      EXPECT_LT(below, 0.0);
      EXPECT_LT(above, 0.0);
    } else {
      EXPECT_GT(below, 0.0);
      EXPECT_GT(above, 0.0);
    }
    // Quadratic shape: the two offsets agree to leading order.
    EXPECT_NEAR(below / above, 1.0, 0.2);
  }
}

TEST(TurningPoint, FoldsBracketTheSweepJumps) {
  const auto& r = two_ion_report();
  ASSERT_EQ(r.folds.size(), 2u);
  // Trace extrema are within one secant step of the folds.
  double vmax = -1e300, vmin = 1e300;
  for (const auto& p : two_ion_branch().points) {
    if (p.I > r.folds[0].I_star - 1.0 && p.I < r.folds[0].I_star + 1.0) vmin = std::min(vmin, p.V);
    if (p.I > r.folds[1].I_star - 1.0 && p.I < r.folds[1].I_star + 1.0) vmax = std::max(vmax, p.V);
  }
  EXPECT_LE(vmax, r.folds[1].V_star + 1e-6);
  EXPECT_GE(vmin, r.folds[0].V_star - 1e-6);
  EXPECT_EQ(r.folds[0].kind, FoldKind::Minimum);
  EXPECT_EQ(r.folds[1].kind, FoldKind::Maximum);
  EXPECT_GT(r.folds[0].I_star, r.folds[1].I_star);
}

TEST(TurningPoint, NeighbouringSeedsAgree) {
  const auto sys = model::two_ion_channel();
  const auto& b = two_ion_branch();
  const auto& r = two_ion_report();
  for (const auto& c : estimate_turning_candidates(b)) {
    for (long offset : {-1L, 1L}) {
      const auto index = static_cast<std::size_t>(static_cast<long>(c.seed) + offset);
      try {
        const auto f = solve_turning_point(sys, b, index);
        const bool matches = std::any_of(r.folds.begin(), r.folds.end(), [&](const TurningPoint& g) {
          return std::abs(g.V_star - f.V_star) <= 1e-4 * g.V_star && std::abs(g.I_star - f.I_star) <= 1e-4 * g.I_star;
        });
        EXPECT_TRUE(matches) << "seed " << index;
      } catch (const ConvergedToWrongFold&) {
      } catch (const NonConvergence&) {
      }
    }
  }
}

TEST(TurningPoint, MonotoneCurveHasNoFold) {
  const auto sys = model::two_ion_channel(60.0, 0.0);
  const auto t = trace_spec(60.0);
  const auto b = continuation::trace_curve(sys, t, continuation::default_trace_steps(t));
  EXPECT_TRUE(estimate_turning_candidates(b).empty());
  EXPECT_TRUE(find_all_turning_points(sys, b).folds.empty());
  try {
    solve_turning_point(sys, b, b.points.size() / 2);
    ADD_FAILURE() << "a fold was reported on a monotone curve";
  } catch (const ConvergedToWrongFold&) {
  } catch (const NonConvergence&) {
  } catch (const MeshBudgetExceeded&) {
  }
}

TEST(TurningPoint, SeedIndexChecked) {
  EXPECT_THROW(solve_turning_point(model::two_ion_channel(), two_ion_branch(), two_ion_branch().points.size()),
               OutOfDomain);
  EXPECT_THROW(solve_turning_point(model::two_ion_channel(), synthetic({0, 1}), 0), TooFewPoints);
}

TEST(Multiplicity, SShapedTwoIonCurve) {
  const auto& r = two_ion_report();
  const auto map = multiplicity_intervals(r.folds, &two_ion_branch());
  ASSERT_EQ(map.intervals.size(), 3u);
  EXPECT_EQ(map.intervals[0].count, 1);
  EXPECT_EQ(map.intervals[1].count, 3);
  EXPECT_EQ(map.intervals[2].count, 1);
  EXPECT_TRUE(std::isinf(map.intervals[0].v_low));
  EXPECT_TRUE(std::isinf(map.intervals[2].v_high));
  EXPECT_FALSE(map.intervals[0].trace_count.has_value());
  ASSERT_TRUE(map.intervals[1].trace_count.has_value());
  EXPECT_EQ(*map.intervals[1].trace_count, map.intervals[1].count);
  EXPECT_EQ(map.fold_voltages.size(), 2u);
}

TEST(Multiplicity, CountsFromFoldKinds) {
  const auto none = multiplicity_intervals({});
  ASSERT_EQ(none.intervals.size(), 1u);
  EXPECT_EQ(none.intervals[0].count, 1);

  const auto nested = multiplicity_intervals({fake_fold(1.0, FoldKind::Minimum), fake_fold(4.0, FoldKind::Maximum),
                                              fake_fold(2.0, FoldKind::Minimum), fake_fold(3.0, FoldKind::Maximum)});
  std::vector<int> counts;
  for (const auto& i : nested.intervals) counts.push_back(i.count);
  EXPECT_EQ(counts, (std::vector<int>{1, 3, 5, 3, 1}));

  const auto interleaved = multiplicity_intervals({fake_fold(1.0, FoldKind::Minimum), fake_fold(2.0, FoldKind::Maximum),
                                                   fake_fold(3.0, FoldKind::Minimum), fake_fold(4.0, FoldKind::Maximum)});
  counts.clear();
  for (const auto& i : interleaved.intervals) counts.push_back(i.count);
  EXPECT_EQ(counts, (std::vector<int>{1, 3, 1, 3, 1}));
}

TEST(Multiplicity, RejectsInconsistentFolds) {
  EXPECT_THROW(multiplicity_intervals({fake_fold(1.0, FoldKind::Minimum)}), OddFoldCount);
  EXPECT_THROW(multiplicity_intervals({fake_fold(1.0, FoldKind::Maximum), fake_fold(2.0, FoldKind::Minimum)}),
               OddFoldCount);
}
