#include <gtest/gtest.h>

#include <cmath>

#include "lyap/potential.hpp"
#include "lyap/walk.hpp"

using namespace lyap;

namespace {

// Exact E[s^T], T the first passage of a walk to +1 when each step moves the
// relevant coordinate with probability m (and holds otherwise):
// phi = s((1-m) phi + (m/2)(1 + phi^2)).
double first_passage_pgf(double s, double m) {
  const double a = s * m / 2, b = s * (1 - m) - 1, c = s * m / 2;
  return (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

struct Cell {
  Direction ell;
  double gamma;
};

// gamma^{-1/2} and the components of l dyadic, so projections are exact.
std::vector<Cell> dyadic_cells() {
  return {{{1.0}, 1.0}, {{1.0}, 0.25}, {{0.5}, 1.0 / 16}, {{1.0, 0.0}, 0.25},
          {{1.0, -0.5}, 1.0 / 16}, {{0.25, 0.75}, 1.0 / 4}, {{1.0, 1.0, 0.5}, 1.0 / 64}};
}

}  // namespace

TEST(StopTimes, SlabInequalityOnEveryPair) {
  for (const auto& c : dyadic_cells()) {
    const double h = 1.0 / std::sqrt(c.gamma);
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
      const auto r = run_to_stop_count(c.ell.dim(), c.ell, c.gamma, 5, seed);
      ASSERT_EQ(r.stop_times.size(), 6u);
      EXPECT_EQ(r.stop_times[0], 0);
      for (std::size_t a = 0; a < 6; ++a)
        for (std::size_t b = a + 1; b < 6; ++b) {
          EXPECT_LT(r.stop_times[a], r.stop_times[b]);
          const double diff = r.projections[b] - r.projections[a], n = double(b - a);
          EXPECT_GE(diff, h * n);
          EXPECT_LE(diff, (h + c.ell.norm_inf()) * n);
        }
    }
  }
}

TEST(StopTimes, FirstStrictAscentInOneDimension) {
  // gamma = 1, l = e1: T_1 is the first time S reaches +1.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = run_to_stop_count(1, Direction{1.0}, 1.0, 1, seed);
    const auto b = run_to_hit(1, Direction{1.0}, 1, seed);
    EXPECT_EQ(a.stop_times[1], *b.hit_step);
    EXPECT_EQ(a.projections[1], 1.0);
  }
}

TEST(StopTimes, DeterministicPerSeed) {
  const Direction l{1.0, 0.5};
  const auto a = run_to_stop_count(2, l, 0.01, 4, 12345), b = run_to_stop_count(2, l, 0.01, 4, 12345);
  EXPECT_EQ(a.stop_times, b.stop_times);
  EXPECT_EQ(a.projections, b.projections);
  EXPECT_EQ(a.end, b.end);
  const auto c = run_to_stop_count(2, l, 0.01, 4, 12346);
  EXPECT_NE(a.stop_times, c.stop_times);
}

TEST(StopTimes, BudgetIsAnExplicitError) {
  EXPECT_THROW(run_to_stop_count(2, Direction{1.0, 0.0}, 1e-6, 3, 1, 1000), BudgetExceeded);
  EXPECT_THROW(run_to_stop_count(1, Direction{1.0}, 1.0, 0, 1), std::invalid_argument);
  EXPECT_THROW(run_to_stop_count(1, Direction{0.0}, 1.0, 1, 1), std::invalid_argument);
  EXPECT_THROW(run_to_stop_count(1, Direction{1.0}, 0.0, 1, 1), std::invalid_argument);
}

TEST(Halfspace, BracketOrderAndOvershoot) {
  for (const auto& c : dyadic_cells())
    for (std::int64_t k : {1, 3, 8}) {
      const auto mk = slab_lower_count(c.ell, c.gamma, k), Mk = slab_upper_count(c.ell, c.gamma, k);
      const double level = k * c.ell.self_dot();
      for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto r = run_to_halfspace(c.ell.dim(), c.ell, c.gamma, k, seed);
        const auto H = *r.halfspace_step;
        EXPECT_LE(r.stop_times[static_cast<std::size_t>(mk)], H);
        EXPECT_LE(H, r.stop_times[static_cast<std::size_t>(Mk)]);
        EXPECT_GE(*r.halfspace_projection, level);
        EXPECT_LT(*r.halfspace_projection, level + c.ell.norm_inf());
        if (r.hit_step) {
          EXPECT_LE(H, *r.hit_step);
        }
      }
    }
}

TEST(Halfspace, EqualsPointHitInOneDimension) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = run_to_halfspace(1, Direction{1.0}, 1.0, 1, seed);
    ASSERT_TRUE(r.hit_step.has_value());
    EXPECT_EQ(*r.halfspace_step, *r.hit_step);
  }
}

TEST(Hit, ZeroPotentialHasZeroWeightAndLocalTimeIdentity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = run_to_hit(1, Direction{1.0}, 1, seed, 100'000'000);
    ASSERT_TRUE(r.hit_step.has_value());
    EXPECT_EQ(r.weight_log, 0.0);
    std::int64_t sum = 0;
    for (const auto& [x, n] : r.local_times) sum += n;
    EXPECT_EQ(sum, *r.hit_step);
  }
}

TEST(Hit, PotentialWeightAndAbsorption) {
  const auto v = sample_field(PotentialSpec::bernoulli(0.4, 0.05, 0.3), BoxRegion(2, 6), 5);
  int absorbed = 0, hit = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto r = run_to_hit(2, Direction{1.0, 1.0}, 2, v, seed);
    std::int64_t sum = 0;
    double w = 0.0;
    for (const auto& [x, n] : r.local_times) {
      sum += n;
      w -= n * v.at(x);
    }
    EXPECT_EQ(sum, r.steps_taken);
    if (r.absorbed) {
      ++absorbed;
      EXPECT_TRUE(std::isinf(r.weight_log) && r.weight_log < 0);
      EXPECT_TRUE(v.box.is_boundary(r.end));
    } else {
      ++hit;
      EXPECT_EQ(r.end, (Site{2, 2}));
      EXPECT_NEAR(r.weight_log, w, 1e-9 * (1 + std::abs(w)));
    }
  }
  EXPECT_GT(absorbed, 0);
  EXPECT_GT(hit, 0);
  EXPECT_THROW(run_to_hit(2, Direction{1.0, 1.0}, 7, v, 1), std::invalid_argument);
}

TEST(Steps, UniformFrequencies) {
  UniformSteps s(3, 42);
  std::vector<int> c(6, 0);
  const int n = 600000;
  for (int i = 0; i < n; ++i) ++c[static_cast<std::size_t>(s.next())];
  for (int x : c) EXPECT_NEAR(x / double(n), 1.0 / 6, 4 * std::sqrt((1.0 / 6) * (5.0 / 6) / n));
}

TEST(Steps, TiltedFrequenciesAndLogMgf) {
  const Direction l{1.0, -0.5};
  const double theta = 0.7;
  TiltedSteps s(l, theta, 9);
  std::vector<int> c(4, 0);
  const int n = 400000;
  for (int i = 0; i < n; ++i) ++c[static_cast<std::size_t>(s.next())];
  double z = 0;
  std::vector<double> w;
  for (int i = 0; i < 2; ++i)
    for (int sg : {-1, 1}) {
      w.push_back(std::exp(theta * sg * l[i]));
      z += w.back();
    }
  for (int j = 0; j < 4; ++j) {
    const double p = w[static_cast<std::size_t>(j)] / z;
    EXPECT_NEAR(c[static_cast<std::size_t>(j)] / double(n), p, 4 * std::sqrt(p * (1 - p) / n));
  }
  EXPECT_NEAR(step_log_mgf(l, theta), std::log(z / 4), 1e-14);
}

TEST(SlabPieces, BudgetDropsPathsInsteadOfFailing) {
  const auto r = slab_pieces_statistics(1, Direction{1.0}, 1.0, 2, 400, 3, 1, 50);
  EXPECT_GT(r.dropped, 0u);
  EXPECT_EQ(r.increments.size(), r.paths);
  EXPECT_THROW(slab_pieces_statistics(1, Direction{1.0}, 1.0 / 64, 2, 20, 3, 1, 10), BudgetExceeded);
}

TEST(SlabPieces, EmptyForSingleSlab) {
  EXPECT_TRUE(slab_pieces_statistics(1, Direction{1.0}, 1.0, 1, 10, 1).empty());
}

TEST(SlabPieces, IndependentAndIdenticallyDistributed) {
  for (const auto& [ell, gamma] : std::vector<std::pair<Direction, double>>{{{1.0}, 0.25}, {{1.0, 0.5}, 0.25}}) {
    const auto r = slab_pieces_statistics(ell.dim(), ell, gamma, 3, 10000, 77, 1, 1'000'000);
    EXPECT_LT(r.dropped, 100u);
    EXPECT_EQ(r.paths + r.dropped, 10000u);
    EXPECT_TRUE(r.independent()) << r.max_consecutive_z;
    EXPECT_TRUE(r.identically_distributed()) << r.ks_statistic << " > " << r.ks_critical;
  }
}

TEST(Laplace, MatchesExactFirstPassageTransform) {
  // gamma = 1, l = e1: T_1 is the first passage to +1 of the e1 coordinate,
  // which moves with probability 1/d per step.
  for (int d : {1, 2}) {
    const double c = 0.5;
    Direction l(Site::unit(d, 0));
    const auto est = laplace_estimate(d, l, 1.0, c, 40000, 2024);
    const double exact = first_passage_pgf(std::exp(-c), 1.0 / d);
    EXPECT_NEAR(est.mean, exact, 4 * est.stderr) << "d=" << d;
  }
}

TEST(Laplace, LimitFormula) {
  EXPECT_NEAR(laplace_limit(1, Direction{1.0}, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(laplace_limit(2, Direction{1.0, 0.0}, 1.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(laplace_limit(2, Direction{2.0, 0.0}, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(laplace_limit(1, Direction{1.0}, 1.0), 0.24312, 5e-6);
}

TEST(Laplace, ThreadCountDoesNotChangeResult) {
  const auto a = laplace_estimate(2, Direction{1.0, 0.0}, 0.01, 1.0, 2000, 5, 1);
  const auto b = laplace_estimate(2, Direction{1.0, 0.0}, 0.01, 1.0, 2000, 5, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stderr, b.stderr);
}
