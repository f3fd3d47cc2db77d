#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lyap/green.hpp"
#include "lyap/potential.hpp"

using namespace lyap;

namespace {

ScalarField constant_field(int d, std::int64_t r, double v) { return ScalarField(BoxRegion(d, r), v); }

SolveOptions with(SolveMethod m, double tol = 1e-13) {
  SolveOptions o;
  o.method = m;
  o.tolerance = tol;
  return o;
}

// Green's column by plain Jacobi, written independently of the library. With
// `shift` = 1 every neighbour average reads one site too far along axis 0 --
// the deliberate off-by-one of the mutation test.
ScalarField hand_green(const ScalarField& v, const Site& y, int shift) {
  const auto& box = v.box;
  const int d = box.dim();
  std::vector<double> g(box.size(), 0.0), next(box.size(), 0.0);
  for (int it = 0; it < 20000; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
      const Site x = box.site(i);
      if (!box.is_interior(x)) continue;
      double avg = 0.0;
      for (auto z : neighbors(x)) {
        if (shift && z[0] > x[0]) z[0] += shift;
        avg += box.contains(z) ? g[box.index(z)] : 0.0;
      }
      avg /= 2.0 * d;
      next[i] = std::exp(-v.values[i]) * ((x == y ? 1.0 : 0.0) + avg);
      if (next[i] > 0) change = std::max(change, std::abs(next[i] - g[i]) / next[i]);
    }
    g.swap(next);
    if (change < 1e-15) break;  // relative, so far-field values converge too
  }
  ScalarField out(box);
  out.values = g;
  return out;
}

double factorization_residual(const ScalarField& g, const ScalarField& u, const Site& y) {
  double r = 0.0;
  const double gyy = g.at(y);
  for (std::size_t i = 0; i < g.size(); ++i)
    r = std::max(r, std::abs(g.values[i] - u.values[i] * gyy) / std::max(std::abs(g.values[i]), 1e-300));
  return r;
}

}  // namespace

TEST(Passage, GamblersRuin) {
  for (std::int64_t R : {3, 7, 20}) {
    const auto u = solve_passage(constant_field(1, R, 0.0), Site{1}, with(SolveMethod::jacobi));
    EXPECT_NEAR(u.field.at(Site{0}), double(R) / (R + 1), 1e-10);
    for (std::int64_t x = -R; x <= 1; ++x) EXPECT_NEAR(u.field.at(Site{x}), double(x + R) / (R + 1), 1e-10);
    for (std::int64_t x = 1; x <= R; ++x) EXPECT_NEAR(u.field.at(Site{x}), double(R - x) / (R - 1), 1e-10);
  }
  EXPECT_EQ(solve_passage(constant_field(1, 7, 0.0), Site{1}, with(SolveMethod::direct)).field.at(Site{0}), 0.875);
}

TEST(Passage, ConstantPotentialExactOnBox) {
  // cosh(s) = e^V; on [-R, 1] the solution is sinh(s (x + R)) / sinh(s (R + 1)).
  for (double V : {0.05, 0.5, std::log(2.0)}) {
    const std::int64_t R = 40;
    const double s = std::acosh(std::exp(V));
    for (auto m : {SolveMethod::jacobi, SolveMethod::gauss_seidel, SolveMethod::direct}) {
      const auto u = solve_passage(constant_field(1, R, V), Site{1}, with(m));
      for (std::int64_t x = -R; x <= 0; ++x)
        EXPECT_NEAR(u.field.at(Site{x}), std::sinh(s * (x + R)) / std::sinh(s * (R + 1)), 1e-11) << to_string(m);
    }
  }
  // V = ln 2 on a long box: u(0) -> 2 - sqrt(3).
  EXPECT_NEAR(solve_passage(constant_field(1, 60, std::log(2.0)), Site{1}, with(SolveMethod::direct)).field.at(Site{0}),
              2.0 - std::sqrt(3.0), 1e-12);
}

TEST(Passage, MethodsAgreeInTwoDimensions) {
  const auto v = sample_field(PotentialSpec::bernoulli(0.5, 0.0, 1.0), BoxRegion(2, 10), 3);
  const auto a = solve_passage(v, Site{3, 0}, with(SolveMethod::jacobi));
  const auto b = solve_passage(v, Site{3, 0}, with(SolveMethod::gauss_seidel));
  EXPECT_LT(max_relative_difference(a.field, b.field), 1e-10);
  EXPECT_LT(b.sweeps_used, a.sweeps_used);
  EXPECT_LE(a.residual, 1e-13);
  EXPECT_GT(a.contraction, 0.0);
  EXPECT_LT(a.contraction, 1.0);
}

TEST(Passage, BoundsMonotonicityAndSymmetry) {
  const auto v = sample_field(PotentialSpec::exponential(2.0), BoxRegion(2, 8), 17);
  auto w = v;
  for (auto& x : w.values) x += 0.1;
  const auto u = solve_passage(v, Site{2, 1}, with(SolveMethod::gauss_seidel)).field;
  const auto uw = solve_passage(w, Site{2, 1}, with(SolveMethod::gauss_seidel)).field;
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_GE(u.values[i], 0.0);
    EXPECT_LE(u.values[i], 1.0);
    EXPECT_LE(uw.values[i], u.values[i] * (1 + 1e-12));
    if (v.box.is_boundary(v.box.site(i))) {
      EXPECT_EQ(u.values[i], 0.0);
    }
  }
  EXPECT_EQ(u.at(Site{2, 1}), 1.0);
  // Constant potential: reflection x2 -> -x2 about the axis of the target.
  const auto c = solve_passage(constant_field(2, 9, 0.3), Site{2, 0}, with(SolveMethod::gauss_seidel)).field;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Site x = c.box.site(i);
    Site r = x;
    r[1] = -r[1];
    EXPECT_NEAR(c.values[i], c.at(r), 1e-13);
  }
}

TEST(Passage, InfinitePotentialIsAWall) {
  auto v = constant_field(1, 10, 0.0);
  v.at(Site{-2}) = kInf;
  EXPECT_NEAR(solve_passage(v, Site{1}, with(SolveMethod::direct)).field.at(Site{0}), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(solve_passage(v, Site{1}, with(SolveMethod::jacobi)).field.at(Site{0}), 2.0 / 3.0, 1e-10);
}

TEST(Passage, RejectsBadInput) {
  EXPECT_THROW(solve_passage(constant_field(1, 5, 0.1), Site{5}), std::invalid_argument);
  EXPECT_THROW(solve_passage(constant_field(1, 5, 0.1), Site{1, 0}), std::invalid_argument);
  auto neg = constant_field(1, 5, 0.1);
  neg.values[3] = -1;
  EXPECT_THROW(solve_passage(neg, Site{1}), std::invalid_argument);
  EXPECT_THROW(solve_passage(constant_field(2, 3, 0.1), Site{1, 0}, with(SolveMethod::direct)), std::invalid_argument);
  SolveOptions bad;
  bad.max_sweeps = 2;
  EXPECT_THROW(solve_passage(constant_field(2, 6, 0.01), Site{1, 0}, bad), NonConvergence);
}

TEST(Green, IllPosedWithoutKillingInLowDimension) {
  EXPECT_THROW(solve_green_column(constant_field(2, 5, 0.0), Site{0, 0}), IllPosed);
  EXPECT_THROW(solve_green_column(constant_field(1, 5, 0.0), Site{0}), IllPosed);
  // d = 3 is transient: the box column exists even without killing.
  EXPECT_NO_THROW(solve_green_column(constant_field(3, 3, 0.0), Site{0, 0, 0}, with(SolveMethod::gauss_seidel)));
}

TEST(Green, OperatorGreenWithoutPotentialGrowsWithBox) {
  double prev = 0.0;
  for (std::int64_t R : {4, 8, 16}) {
    const auto G = solve_operator_green(constant_field(1, R, 0.0), Site{0}, with(SolveMethod::direct));
    EXPECT_GT(G.field.at(Site{0}), prev);
    prev = G.field.at(Site{0});
    // Discrete Laplacian with absorbing walls: G(0,0) = R/2 * 2 ... = R in these units.
    EXPECT_NEAR(G.field.at(Site{0}), double(R), 1e-9);
  }
}

TEST(Identities, HoldOnRandomPotentials) {
  for (std::uint64_t s = 0; s < 12; ++s) {
    const int d = 1 + static_cast<int>(s % 3);
    const std::int64_t R = d == 3 ? 4 : 9;
    const auto spec = s % 2 ? PotentialSpec::exponential(1.5) : PotentialSpec::bernoulli(0.4, 0.0, 2.0);
    const auto v = sample_field(spec, BoxRegion(d, R), s);
    Site y = Site::unit(d, 0);
    const auto o = with(d == 1 ? SolveMethod::direct : SolveMethod::gauss_seidel);
    EXPECT_LE(factorization_check(v, y, o).residual, 1e-9) << s;
    EXPECT_LE(operator_correspondence_check(v, y, o).residual, 1e-9) << s;
    EXPECT_LE(geometric_return_check(v, y, o).residual, 1e-9) << s;
  }
}

TEST(Identities, HandRolledSolverAgreesAndMutantBreaksFactorization) {
  const auto v = sample_field(PotentialSpec::bernoulli(0.5, 0.1, 1.0), BoxRegion(2, 6), 8);
  const Site y{2, 1};
  const auto o = with(SolveMethod::gauss_seidel, 1e-14);
  const auto u = solve_passage(v, y, o).field;
  const auto good = hand_green(v, y, 0);
  const auto lib = solve_green_column(v, y, o).field;
  EXPECT_LT(max_relative_difference(good, lib), 1e-10);
  EXPECT_LE(factorization_residual(good, u, y), 1e-9);
  const auto mutant = hand_green(v, y, 1);
  EXPECT_GT(factorization_residual(mutant, u, y), 1e-3);
}

TEST(Dumps, CsvHeaderAndBinaryRoundTrip) {
  ScalarField f(BoxRegion(2, 2, Site{1, -1}));
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = 0.1 * double(i);
  std::ostringstream csv;
  write_field_csv(csv, f);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "x0,x1,value");
  std::stringstream bin;
  write_field_binary(bin, f);
  EXPECT_EQ(bin.str().substr(0, 8), "LYAPFLD1");
  EXPECT_EQ(bin.str().size(), 8 + 4 + 4 + 2 * 8 + 25 * 8u);
  const auto g = read_field_binary(bin);
  EXPECT_TRUE(g.box == f.box);
  EXPECT_EQ(g.values, f.values);
  std::stringstream junk("NOTAFIELD");
  EXPECT_THROW(read_field_binary(junk), std::runtime_error);
}
