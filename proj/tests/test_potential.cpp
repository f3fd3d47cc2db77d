#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lyap/potential.hpp"
#include "lyap/rng.hpp"

using namespace lyap;

namespace {

std::vector<PotentialSpec> zoo() {
  return {PotentialSpec::constant(0.7),
          PotentialSpec::bernoulli(0.3, 0.0, 2.0),
          PotentialSpec::two_point(0.25, 0.1, 1.5),
          PotentialSpec::exponential(2.0),
          PotentialSpec::bernoulli(0.5, 0.0, 1.0).scaled(Scaling::gamma_scaled, 0.01),
          PotentialSpec::exponential(1.5).scaled(Scaling::gamma_scaled, 0.1),
          PotentialSpec::bernoulli(0.5, 0.0, 3.0).scaled(Scaling::log1p_gamma, 0.2),
          PotentialSpec::exponential(1.0).scaled(Scaling::log1p_gamma, 0.5),
          PotentialSpec::example3(0.05),
          PotentialSpec::example4(0.2)};
}

// Midpoint rule for E[f(X)], X ~ Exp(rate); independent of the library's quadrature.
template <typename F>
double exp_expectation(double rate, F f) {
  double s = 0.0;
  const double h = 2e-4;
  for (double t = h / 2; t < 60.0; t += h) s += std::exp(-t) * f(t / rate) * h;
  return s;
}

}  // namespace

TEST(Mean, ClosedForms) {
  EXPECT_DOUBLE_EQ(mean(PotentialSpec::constant(0.7)), 0.7);
  EXPECT_DOUBLE_EQ(mean(PotentialSpec::bernoulli(0.3, 0.0, 2.0)), 0.6);
  EXPECT_DOUBLE_EQ(mean(PotentialSpec::exponential(4.0)), 0.25);
  EXPECT_DOUBLE_EQ(mean(PotentialSpec::exponential(4.0).scaled(Scaling::gamma_scaled, 0.5)), 0.125);
  EXPECT_NEAR(mean(PotentialSpec::example3(0.05)) / 0.05, 1.0, 1e-12);
  const double g = 1e-3, q = std::cbrt(g);
  EXPECT_NEAR(mean(PotentialSpec::example4(g)), (1 - q) * g + q / g, 1e-9);
  EXPECT_TRUE(std::isinf(mean(PotentialSpec::bernoulli(0.5, 0.0, kInf))));
}

TEST(Mean, Log1pExponentialMatchesIndependentQuadrature) {
  const double g = 0.5;
  const double ref = exp_expectation(1.0, [&](double x) { return std::log1p(g * x); });
  EXPECT_NEAR(mean(PotentialSpec::exponential(1.0).scaled(Scaling::log1p_gamma, g)), ref, 1e-7);
  const double lam = 1.3;
  const double mgf = exp_expectation(1.0, [&](double x) { return std::exp(-lam * std::log1p(g * x)); });
  EXPECT_NEAR(log_mgf(PotentialSpec::exponential(1.0).scaled(Scaling::log1p_gamma, g), lam), -std::log(mgf), 1e-7);
}

TEST(LogMgf, ClosedForms) {
  EXPECT_NEAR(log_mgf(PotentialSpec::constant(0.7), 2.0), 1.4, 1e-15);
  EXPECT_NEAR(log_mgf(PotentialSpec::exponential(2.0), 1.0), std::log(1.5), 1e-15);
  EXPECT_NEAR(log_mgf(PotentialSpec::bernoulli(0.3, 0.0, 2.0), 1.0), -std::log(0.7 + 0.3 * std::exp(-2.0)), 1e-15);
  // Example 4's single-site bound at gamma = 1e-3.
  EXPECT_NEAR(log_mgf(PotentialSpec::example4(1e-3), 1.0), 0.106361, 5e-7);
  // +inf atoms: e^{-inf} = 0.
  EXPECT_NEAR(log_mgf(PotentialSpec::bernoulli(0.5, 0.0, kInf), 1.0), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isinf(log_mgf(PotentialSpec::constant(kInf), 1.0)));
  EXPECT_THROW(log_mgf(PotentialSpec::constant(1.0), -1.0), std::invalid_argument);
}

TEST(LogMgf, ZeroAtOriginSlopeIsMeanConcaveIncreasing) {
  for (const auto& s : zoo()) {
    SCOPED_TRACE(s.describe());
    EXPECT_EQ(log_mgf(s, 0.0), 0.0);
    const double h = 1e-7;
    EXPECT_NEAR(log_mgf(s, h) / h, mean(s), 1e-4 * std::max(1.0, mean(s)));
    for (double l : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const double a = log_mgf(s, l - 0.05), b = log_mgf(s, l), c = log_mgf(s, l + 0.05);
      EXPECT_LE(a, b);
      EXPECT_GE(b - a, c - b - 1e-12);
    }
  }
}

TEST(DrawValue, FrequenciesMatchAtoms) {
  const auto s = PotentialSpec::two_point(0.25, 0.1, 1.5);
  Engine e(11);
  std::map<double, int> count;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++count[draw_value(s, to_unit(e()))];
  ASSERT_EQ(count.size(), 2u);
  EXPECT_NEAR(count[1.5] / double(n), 0.25, 4 * std::sqrt(0.25 * 0.75 / n));
}

TEST(DrawValue, Example4TakesOnlyTwoValues) {
  const auto s = PotentialSpec::example4(1e-3);
  Engine e(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = draw_value(s, to_unit(e()));
    EXPECT_TRUE(std::abs(v - 1e-3) < 1e-15 || std::abs(v - 1e3) < 1e-9) << v;
  }
}

TEST(DrawValue, Log1pScalingBoundedByRawAndConverges) {
  const auto raw = PotentialSpec::exponential(1.0);
  for (double u : {0.01, 0.3, 0.9, 0.999}) {
    const double v = draw_value(raw, u);
    for (double g : {0.5, 0.1, 1e-3}) EXPECT_LE(draw_value(raw.scaled(Scaling::log1p_gamma, g), u) / g, v * (1 + 1e-15));
    EXPECT_NEAR(draw_value(raw.scaled(Scaling::log1p_gamma, 1e-9), u) / 1e-9, v, 1e-6 * (1 + v));
  }
}

TEST(SampleField, DeterministicAndConsistentAcrossBoxes) {
  const auto s = PotentialSpec::bernoulli(0.5, 0.0, 1.0);
  const auto a = sample_field(s, BoxRegion(2, 4), 99);
  const auto b = sample_field(s, BoxRegion(2, 7), 99);
  const auto c = sample_field(s, BoxRegion(2, 4), 100);
  int differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Site x = a.box.site(i);
    EXPECT_EQ(a.values[i], b.at(x));
    differ += a.values[i] != c.values[i];
  }
  EXPECT_GT(differ, 0);
}

TEST(LimitSpec, TargetsOfScalings) {
  EXPECT_EQ(mean(limit_spec(PotentialSpec::bernoulli(0.5, 0, 1).scaled(Scaling::gamma_scaled, 0.01))), 0.5);
  EXPECT_EQ(mean(limit_spec(PotentialSpec::exponential(2).scaled(Scaling::log1p_gamma, 0.01))), 0.5);
  EXPECT_EQ(mean(limit_spec(PotentialSpec::example3(0.01))), 0.0);
  EXPECT_EQ(mean(limit_spec(PotentialSpec::example4(0.01))), 1.0);
}

TEST(OperatorTransform, LogOnePlus) {
  const auto t = operator_transform(PotentialSpec::bernoulli(0.3, 0.5, 2.0));
  ASSERT_EQ(t.family, Family::two_point);
  EXPECT_DOUBLE_EQ(t.params[0], 0.3);
  EXPECT_DOUBLE_EQ(t.params[1], std::log1p(0.5));
  EXPECT_DOUBLE_EQ(t.params[2], std::log1p(2.0));
  const auto e = operator_transform(PotentialSpec::exponential(2.0).scaled(Scaling::gamma_scaled, 0.1));
  EXPECT_EQ(e.scaling, Scaling::log1p_gamma);
  EXPECT_NEAR(mean(e), exp_expectation(2.0, [](double x) { return std::log1p(0.1 * x); }), 1e-7);
}

TEST(MoreVariable, PairsShareMeansAndOrderConcaveExpectations) {
  for (const auto& p : more_variable_pairs()) {
    SCOPED_TRACE(p.name);
    EXPECT_NEAR(mean(p.more_variable), mean(p.less_variable), 1e-12);
    // h(v) = 1 - e^{-lambda v} is increasing and concave.
    for (double l : {0.3, 1.0, 3.0}) EXPECT_LE(log_mgf(p.more_variable, l), log_mgf(p.less_variable, l) + 1e-12);
  }
}

TEST(Validate, RejectsBadSpecs) {
  EXPECT_THROW(PotentialSpec::constant(-1).validate(), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::constant(0).validate(), std::invalid_argument);  // P[V > 0] = 0
  EXPECT_THROW(PotentialSpec::bernoulli(1.5, 0, 1).validate(), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::exponential(0).validate(), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::example3(1.0).validate(), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::bernoulli(0.5, 0, 1).scaled(Scaling::gamma_scaled, -1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(PotentialSpec::bernoulli(0.5, 0, kInf).validate());
}
