#include <gtest/gtest.h>

#include <cmath>

#include "lyap/scaling_lab.hpp"

using namespace lyap;

namespace {

SweepPlan closed_form_plan(std::vector<double> grid) {
  SweepPlan p;
  p.spec = PotentialSpec::constant(1.0).scaled(Scaling::gamma_scaled, 1.0);
  p.gamma_grid = std::move(grid);
  p.ell = Site{1, 0};
  p.method = Method::closed_form;
  p.tolerance = 1e-3;
  p.relative_tolerance = false;
  return p;
}

}  // namespace

TEST(Sweep, ClosedFormRatioApproachesTarget) {
  const auto rep = run_scaling_sweep(closed_form_plan({1e-2, 1e-4, 1e-6, 1e-8}));
  EXPECT_DOUBLE_EQ(rep.target, 2.0);
  ASSERT_EQ(rep.points.size(), 4u);
  EXPECT_NEAR(rep.points[1].ratio, 2.0000166667083326, 1e-12);  // 2 (1 + g/12 + ...)
  EXPECT_LT(rep.points[3].distance, 1e-6);
  EXPECT_FALSE(rep.points[0].within_tolerance);
  EXPECT_TRUE(rep.points[3].within_tolerance);
  EXPECT_TRUE(rep.distance_decreasing);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.trend.intercept, 2.0, 1e-3);
}

TEST(Sweep, TargetsOfScalingLaws) {
  EXPECT_NEAR(scaling_target(PotentialSpec::bernoulli(0.5, 0, 1).scaled(Scaling::gamma_scaled, 0.1), Direction{1.0, 0.0}),
              std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(scaling_target(PotentialSpec::exponential(2.0).scaled(Scaling::log1p_gamma, 0.1), Direction{3.0}),
              3.0, 1e-15);
  EXPECT_EQ(scaling_target(PotentialSpec::example3(0.1), Direction{1.0}), 0.0);
  EXPECT_NEAR(scaling_target(PotentialSpec::example4(0.1), Direction{1.0}), std::sqrt(2.0), 1e-15);
}

TEST(Sweep, EdgeOfTheGrid) {
  // gamma -> 1 with a constant unit law: the exponent is arcosh(e) in d = 1.
  auto p = closed_form_plan({1.0});
  p.ell = Site{1};
  const auto rep = run_scaling_sweep(p);
  EXPECT_NEAR(rep.points[0].estimate->value, std::acosh(std::exp(1.0)), 1e-12);
  EXPECT_NEAR(rep.points[0].ratio, std::acosh(std::exp(1.0)), 1e-12);
}

TEST(Sweep, PlanValidation) {
  auto p = closed_form_plan({1e-2, 1e-1});
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.gamma_grid = {};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = closed_form_plan({1e-2});
  p.spec = PotentialSpec::constant(1.0);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = closed_form_plan({1e-2, 1e-3});
  p.budgets = {SweepBudget{}, SweepBudget{}, SweepBudget{}};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = closed_form_plan({1e-2});
  p.ell = Site{0, 0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Sweep, FailingPointIsRecordedAndSweepContinues) {
  // Closed form needs a constant law: a Bernoulli plan fails at every point.
  auto p = closed_form_plan({1e-2, 1e-3});
  p.spec = PotentialSpec::bernoulli(0.5, 0.0, 1.0).scaled(Scaling::gamma_scaled, 1.0);
  const auto rep = run_scaling_sweep(p);
  ASSERT_EQ(rep.points.size(), 2u);
  for (const auto& pt : rep.points) {
    EXPECT_FALSE(pt.estimate.has_value());
    EXPECT_FALSE(pt.error.empty());
  }
  EXPECT_FALSE(rep.pass);
  // A budget that forces a solver error at one gamma only.
  auto q = closed_form_plan({0.25, 0.01});
  q.spec = PotentialSpec::bernoulli(0.5, 0.0, 1.0).scaled(Scaling::gamma_scaled, 1.0);
  q.ell = Site{1};
  q.method = Method::quenched_solver;
  q.solve.method = SolveMethod::direct;
  SweepBudget ok, bad;
  ok.samples = bad.samples = 4;
  ok.k_range = bad.k_range = {2, 6};
  ok.radius = 30;
  bad.radius = 5;  // k = 6 is outside the box
  q.budgets = {ok, bad};
  const auto r2 = run_scaling_sweep(q);
  EXPECT_TRUE(r2.points[0].estimate.has_value());
  EXPECT_FALSE(r2.points[1].estimate.has_value());
  EXPECT_FALSE(r2.pass);
}

TEST(Sweep, ScaledKRange) {
  SweepBudget b;
  b.k_scaled = std::make_pair(4.0, 16.0);
  EXPECT_EQ(b.k_range_at(0.01).lo, 40);
  EXPECT_EQ(b.k_range_at(0.01).hi, 160);
  EXPECT_EQ(b.k_range_at(16.0).lo, 1);
}

TEST(Sweep, StochasticMethodTracksClosedForm) {
  auto p = closed_form_plan({0.1, 0.025});
  p.ell = Site{1};
  p.method = Method::hyperplane_mc;
  p.tolerance = 0.05;
  SweepBudget b;
  b.paths = 4000;
  b.k_scaled = std::make_pair(2.0, 6.0);
  p.budgets = {b};
  const auto rep = run_scaling_sweep(p);
  for (const auto& pt : rep.points) {
    ASSERT_TRUE(pt.estimate.has_value()) << pt.error;
    const double exact = std::acosh(std::exp(pt.gamma)) / std::sqrt(pt.gamma);
    EXPECT_NEAR(pt.ratio, exact, 4 * pt.ratio_error + 1e-9);
  }
}

TEST(Laplace, ReportAgainstLimit) {
  const auto rep = laplace_limit_check(1, Direction{1.0}, 0.5, {0.05, 0.0125}, 4000, 3);
  EXPECT_NEAR(rep.target, std::exp(-1.0), 1e-15);
  ASSERT_EQ(rep.points.size(), 2u);
  EXPECT_FALSE(rep.points[0].quarter.has_value());
  ASSERT_TRUE(rep.points[1].quarter.has_value());
  EXPECT_GT(rep.points[1].tolerance, 3 * rep.points[1].estimate.stderr);
  EXPECT_EQ(rep.pass, rep.points[1].pass);
  EXPECT_THROW(laplace_limit_check(1, Direction{1.0}, 0.5, {}, 10, 3), std::invalid_argument);
}

TEST(Example4, BoundExceedsHalfCubeRootAndRatioGrows) {
  const auto rep = example4_check({1e-2, 1e-3, 1e-4, 1e-6});
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.points[1].bound, 0.106361, 5e-7);
  for (const auto& p : rep.points) {
    // Independent evaluation of -ln E[e^{-V}].
    const double q = std::cbrt(p.gamma);
    EXPECT_NEAR(p.bound, -std::log((1 - q) * std::exp(-p.gamma) + q * std::exp(-1.0 / p.gamma)), 1e-14);
    EXPECT_GT(p.bound, p.half_cuberoot);
  }
}

TEST(Example4, LocalTimeCrossCheck) {
  const auto rep = example4_check({1e-2}, 2000, 5);
  ASSERT_TRUE(rep.points[0].annealed.has_value());
  EXPECT_TRUE(rep.points[0].annealed_consistent)
      << rep.points[0].annealed->value << " vs " << rep.points[0].bound;
}

TEST(Example3, PassageBoundsAndBoxIndependence) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto [e, truncated] = example3_passage(0.1, s, 100000);
    EXPECT_FALSE(truncated);
    // One step from 0 to 1 survives with probability e^{-V(0)} / 2.
    const double v0 = draw_value(PotentialSpec::example3(0.1), site_uniform(s, Site{0}));
    EXPECT_GE(e, std::exp(-v0) / 2 * (1 - 1e-12));
    EXPECT_LE(e, std::exp(-v0));
    // Beyond 20 obstacles the box makes no visible difference.
    const auto v = sample_field(PotentialSpec::example3(0.1), BoxRegion(1, 2000), s);
    SolveOptions o;
    o.method = SolveMethod::direct;
    EXPECT_NEAR(e, solve_passage(v, Site{1}, o).field.at(Site{0}), 1e-8 * e);
  }
  EXPECT_TRUE(example3_passage(0.001, 1, 50).second);
}

TEST(Example3, QuenchedBelowBound) {
  const auto rep = example3_check({0.1, 0.03}, 400, 1000000, 11);
  EXPECT_TRUE(rep.bounds_hold);
  EXPECT_FALSE(rep.truncation_flag);
  for (const auto& p : rep.points) EXPECT_NEAR(p.bound, -2 * p.gamma * std::log(p.gamma), 1e-15);
}

TEST(Invariants, PathCountsAreClean) {
  const auto c = check_path_invariants(Direction{1.0, 0.5}, 1.0 / 16, 4, 300, 2);
  EXPECT_EQ(c.paths + c.censored, 300u);
  EXPECT_LT(c.censored, 3u);
  EXPECT_EQ(c.slab_violations, 0u);
  EXPECT_EQ(c.bracket_violations, 0u);
  EXPECT_EQ(c.order_violations, 0u);
  EXPECT_EQ(c.overshoot_violations, 0u);
}

TEST(Invariants, QuickSuitesPass) {
  for (auto s : {Suite::closed_form, Suite::identities}) {
    const auto led = invariant_suite(7, s, 0.2);
    EXPECT_FALSE(led.results.empty());
    for (const auto& r : led.results) EXPECT_TRUE(r.passed) << r.suite << "/" << r.name << ": " << r.detail;
    EXPECT_TRUE(led.all_passed());
  }
  EXPECT_EQ(suite_from_string("ordering"), Suite::ordering);
  EXPECT_EQ(to_string(Suite::counterexamples), "counterexamples");
  EXPECT_THROW(suite_from_string("bogus"), std::invalid_argument);
}
