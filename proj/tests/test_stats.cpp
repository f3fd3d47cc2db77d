#include <gtest/gtest.h>

#include <cmath>

#include "lyap/rng.hpp"
#include "lyap/stats.hpp"

using namespace lyap;

TEST(FitLine, RecoversExactLineAndWeights) {
  const std::vector<double> x{1, 2, 3, 4}, y{1.5, 3.5, 5.5, 7.5};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, -0.5, 1e-14);
  // A huge weight pins the fit through that point.
  const auto g = fit_line({0, 1, 2}, {0, 1, 5}, {1e12, 1e12, 1e-12});
  EXPECT_NEAR(g.slope, 1.0, 1e-9);
}

TEST(Moments, SmallSamples) {
  EXPECT_DOUBLE_EQ(sample_mean({1, 2, 3}), 2.0);
  EXPECT_DOUBLE_EQ(sample_variance({1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(standard_error({1, 2, 3}), std::sqrt(1.0 / 3.0));
  // Jackknife of leave-one-out means equals the ordinary standard error.
  const std::vector<double> v{2.0, 3.5, 1.0, 7.0, 4.5};
  std::vector<double> loo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (j != i) s += v[j];
    loo.push_back(s / 4.0);
  }
  EXPECT_NEAR(jackknife_error(loo), standard_error(v), 1e-14);
}

TEST(Ranks, TiesShareAverage) {
  const auto r = average_ranks({10, 20, 10, 30});
  EXPECT_EQ(r, (std::vector<double>{1.5, 3, 1.5, 4}));
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 4, 9, 16}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
}

TEST(KolmogorovSmirnov, StatisticAndCritical) {
  EXPECT_DOUBLE_EQ(ks_statistic({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(ks_statistic({1, 2}, {3, 4}), 1.0);
  // c(0.05) = 1.358 for the two-sample asymptotic test.
  EXPECT_NEAR(ks_critical_value(100, 100, 0.05), 1.3581 * std::sqrt(0.02), 1e-3);
  Engine e(7);
  std::vector<double> a, b;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(to_unit_open_low(e()));
    b.push_back(to_unit_open_low(e()));
  }
  EXPECT_LT(ks_statistic(a, b), ks_critical_value(a.size(), b.size(), 1e-3));
}
