#pragma once

// Lyapunov exponents: closed forms for constant potentials, the
// point-to-hyperplane martingale formula, and the statistical estimators.
//
// Every estimator reduces to a decay curve y(k) ~ -ln q(k) over a range of k
// and extrapolates with a least-squares slope over the upper half of the
// range. For point targets the curve carries an Ornstein-Zernike prefactor
// q(k) ~ C k^{-(d-1)/2} e^{-alpha k}; its logarithm is subtracted before the
// fit, which removes the dominant finite-k bias in d >= 2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lyap/errors.hpp"
#include "lyap/green.hpp"
#include "lyap/lattice.hpp"
#include "lyap/parallel.hpp"
#include "lyap/potential.hpp"
#include "lyap/rng.hpp"
#include "lyap/roots.hpp"
#include "lyap/stats.hpp"
#include "lyap/walk.hpp"

namespace lyap {

enum class Method { closed_form, martingale_form, quenched_solver, annealed_direct, annealed_localtime, hyperplane_mc };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::martingale_form: return "martingale_form";
    case Method::quenched_solver: return "quenched_solver";
    case Method::annealed_direct: return "annealed_direct";
    case Method::annealed_localtime: return "annealed_localtime";
    case Method::hyperplane_mc: return "hyperplane_mc";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (auto m : {Method::closed_form, Method::martingale_form, Method::quenched_solver, Method::annealed_direct,
                 Method::annealed_localtime, Method::hyperplane_mc})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "'");
}

struct KRange {
  std::int64_t lo = 1;
  std::int64_t hi = 1;

  void validate() const {
    if (lo < 1 || hi < lo) throw std::invalid_argument("k_range must satisfy 1 <= lo <= hi");
  }
  std::vector<std::int64_t> values() const {
    std::vector<std::int64_t> ks;
    for (auto k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  }
  friend bool operator==(const KRange&, const KRange&) = default;
};

struct ExponentEstimate {
  double value = 0.0;
  Method method = Method::closed_form;
  KRange k_range;
  double stat_error = 0.0;
  std::optional<std::pair<double, double>> truncation_bracket;
  // Drift diagnostic: slopes over the lower and upper halves of k_range.
  double first_half_slope = std::numeric_limits<double>::quiet_NaN();
  double second_half_slope = std::numeric_limits<double>::quiet_NaN();
  double censored_fraction = 0.0;
  double missed_fraction = 0.0;  // (path, k) pairs whose target was never reached
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<std::int64_t> ks;  // decay curve, for CSV output
  std::vector<double> curve;     // -ln q(k)
};

// ---------------------------------------------------------------------------
// Closed forms

/// Root s > 0 of d e^gamma = sum_i sqrt(1 + (l_i s)^2), written as
/// sum_i (l_i s)^2 / (sqrt(1 + (l_i s)^2) + 1) = d expm1(gamma) to avoid
/// cancellation at small gamma.
inline RootSolveResult constant_exponent_root(int d, double gamma, const Direction& ell) {
  const double rhs = d * std::expm1(gamma);
  auto f = [&](double s) {
    double acc = 0.0;
    for (int i = 0; i < ell.dim(); ++i) {
      const double q = ell[i] * s;
      acc += q * q / (std::sqrt(1.0 + q * q) + 1.0);
    }
    return acc - rhs;
  };
  auto df = [&](double s) {
    double acc = 0.0;
    for (int i = 0; i < ell.dim(); ++i) {
      const double q = ell[i] * s;
      acc += ell[i] * q / std::sqrt(1.0 + q * q);
    }
    return acc;
  };
  // Each term is at least |q| - 1, so the largest component alone clears rhs here.
  const double hi = (rhs + 1.0) / ell.norm_inf() * 1.01;
  auto r = bisect_then_newton(f, df, 0.0, hi);
  r.residual /= std::max(1.0, d * std::exp(gamma));
  return r;
}

inline void check_exponent_args(int d, double gamma, const Direction& ell, const char* who) {
  if (ell.dim() != d) throw std::invalid_argument(std::string(who) + ": dimension of l differs from d");
  ell.require_nonzero(who);
  if (!(gamma >= 0.0 && std::isfinite(gamma))) throw std::invalid_argument(std::string(who) + ": gamma must be >= 0");
}

/// alpha_gamma(l) = sum_i l_i arsinh(l_i s) for the constant potential gamma.
inline ExponentEstimate exact_constant_exponent(int d, double gamma, const Direction& ell) {
  check_exponent_args(d, gamma, ell, "exact_constant_exponent");
  ExponentEstimate e;
  e.method = Method::closed_form;
  if (gamma == 0.0) return e;
  const auto r = constant_exponent_root(d, gamma, ell);
  for (int i = 0; i < d; ++i) e.value += ell[i] * std::asinh(ell[i] * r.s);
  return e;
}

/// t > 0 with f_l(t) = ln((1/d) sum_i cosh(t l_i)) = value, solved in the form
/// (1/d) sum_i 2 sinh^2(t l_i / 2) = expm1(value).
inline RootSolveResult step_mgf_inverse(const Direction& ell, double value) {
  const int d = ell.dim();
  const double rhs = std::expm1(value);
  auto f = [&](double t) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const double sh = std::sinh(0.5 * t * ell[i]);
      acc += 2.0 * sh * sh;
    }
    return acc / d - rhs;
  };
  auto df = [&](double t) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += ell[i] * std::sinh(t * ell[i]);
    return acc / d;
  };
  double hi = 1.0 / ell.norm_inf();
  while (f(hi) < 0.0) hi *= 2.0;
  return bisect_then_newton(f, df, 0.0, hi);
}

/// Point-to-hyperplane exponent f_l^{-1}(gamma) l.l.
inline ExponentEstimate hyperplane_exponent_martingale(int d, double gamma, const Direction& ell) {
  check_exponent_args(d, gamma, ell, "hyperplane_exponent_martingale");
  ExponentEstimate e;
  e.method = Method::martingale_form;
  if (gamma == 0.0) return e;
  e.value = step_mgf_inverse(ell, gamma).s * ell.self_dot();
  return e;
}

// ---------------------------------------------------------------------------
// Decay-curve regression

struct CurveFit {
  double slope = 0.0;
  double first_half = std::numeric_limits<double>::quiet_NaN();
  double second_half = std::numeric_limits<double>::quiet_NaN();
};

/// Prefactor power subtracted from -ln q(k) before fitting.
inline double prefactor_power(int d, bool point_target) { return point_target ? 0.5 * (d - 1) : 0.0; }

/// Weighted least-squares slope of y(k) - power ln k over the upper half of
/// the k values (at least two points when available). Empty var means unit
/// weights.
inline CurveFit fit_decay_curve(const std::vector<std::int64_t>& ks, const std::vector<double>& y,
                                const std::vector<double>& var, double power) {
  if (ks.empty() || ks.size() != y.size()) throw std::invalid_argument("fit_decay_curve: bad curve");
  const double mid = 0.5 * static_cast<double>(ks.front() + ks.back());
  auto fit = [&](auto&& keep) {
    std::vector<double> x, z, w;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (!keep(i)) continue;
      const double k = static_cast<double>(ks[i]);
      x.push_back(k);
      z.push_back(y[i] - power * std::log(k));
      const double v = var.empty() ? 0.0 : var[i];
      w.push_back(v > 0.0 && std::isfinite(v) ? 1.0 / v : 1.0);
    }
    if (!var.empty()) {
      // Unit weights unless every point has a usable variance.
      bool usable = true;
      for (std::size_t i = 0; i < ks.size(); ++i)
        if (keep(i) && !(var[i] > 0.0 && std::isfinite(var[i]))) usable = false;
      if (!usable) std::fill(w.begin(), w.end(), 1.0);
    }
    return x.size() >= 2 ? fit_line(x, z, w).slope : std::numeric_limits<double>::quiet_NaN();
  };
  CurveFit out;
  std::size_t upper = 0;
  for (auto k : ks) upper += static_cast<double>(k) >= mid;
  if (ks.size() == 1) {
    const double k = static_cast<double>(ks[0]);
    out.slope = (y[0] - power * std::log(k)) / k;
  } else if (upper >= 2) {
    out.slope = fit([&](std::size_t i) { return static_cast<double>(ks[i]) >= mid; });
  } else {
    out.slope = fit([&](std::size_t i) { return i + 2 >= ks.size(); });
  }
  out.second_half = out.slope;
  out.first_half = fit([&](std::size_t i) { return static_cast<double>(ks[i]) <= mid; });
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo accumulation over fixed path blocks

namespace detail {

/// Per-k sums of path weights for one block of paths.
struct KSums {
  std::vector<double> sum, sumsq;
  std::vector<std::size_t> missed;
  std::size_t paths = 0;
  std::size_t censored = 0;

  explicit KSums(std::size_t nk = 0) : sum(nk, 0.0), sumsq(nk, 0.0), missed(nk, 0) {}
  void add(const KSums& o) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += o.sum[i];
      sumsq[i] += o.sumsq[i];
      missed[i] += o.missed[i];
    }
    paths += o.paths;
    censored += o.censored;
  }
};

/// Runs `paths` paths in fixed blocks; path p always uses derive_seed(seed, p)
/// and blocks are reduced in index order, so the result ignores the thread count.
template <typename PathFn>
std::vector<KSums> run_blocks(std::size_t paths, std::size_t nk, std::size_t blocks, unsigned threads, PathFn&& path) {
  blocks = std::max<std::size_t>(1, std::min(blocks, paths));
  std::vector<KSums> out(blocks, KSums(nk));
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t p0 = b * paths / blocks, p1 = (b + 1) * paths / blocks;
    auto state = path.make_state();
    for (std::size_t p = p0; p < p1; ++p) path(state, p, out[b]);
  });
  return out;
}

/// y_k = offset_k - ln(mean weight_k), fitted; jackknife over blocks.
inline ExponentEstimate finish_mc(const std::vector<KSums>& blocks, const std::vector<std::int64_t>& ks,
                                  const std::vector<double>& offset, double power, Method method, double max_censored) {
  KSums tot(ks.size());
  for (const auto& b : blocks) tot.add(b);
  ExponentEstimate e;
  e.method = method;
  e.k_range = {ks.front(), ks.back()};
  e.samples = tot.paths;
  e.censored_fraction = static_cast<double>(tot.censored) / static_cast<double>(tot.paths);
  if (e.censored_fraction > max_censored)
    throw BudgetExceeded("Monte Carlo estimator: censored fraction " + std::to_string(e.censored_fraction) +
                             " exceeds " + std::to_string(max_censored),
                         0, e.censored_fraction);
  std::size_t missed = 0;
  for (auto m : tot.missed) missed += m;
  e.missed_fraction = static_cast<double>(missed) / static_cast<double>(tot.paths * ks.size());

  const auto n = static_cast<double>(tot.paths);
  auto curve = [&](const KSums& s, double count, std::vector<double>* var) {
    std::vector<double> y(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double m = s.sum[i] / count;
      if (!(m > 0.0)) throw Error("Monte Carlo estimator: no path reached k = " + std::to_string(ks[i]));
      y[i] = offset[i] - std::log(m);
      if (var) (*var)[i] = std::max(0.0, s.sumsq[i] / count - m * m) / (count * m * m);
    }
    return y;
  };
  std::vector<double> var(ks.size());
  e.ks = ks;
  e.curve = curve(tot, n, &var);
  const auto fit = fit_decay_curve(ks, e.curve, var, power);
  e.value = fit.slope;
  e.first_half_slope = fit.first_half;
  e.second_half_slope = fit.second_half;
  if (blocks.size() >= 2) {
    std::vector<double> reps;
    for (const auto& b : blocks) {
      KSums rest = tot;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        rest.sum[i] -= b.sum[i];
        rest.sumsq[i] -= b.sumsq[i];
      }
      reps.push_back(fit_decay_curve(ks, curve(rest, n - static_cast<double>(b.paths), nullptr), var, power).slope);
    }
    e.stat_error = jackknife_error(reps);
  }
  return e;
}

}  // namespace detail

struct MonteCarloOptions {
  double theta = std::numeric_limits<double>::quiet_NaN();  // tilt; NaN = automatic, 0 = none
  double margin_nats = 12.0;                                 // overshoot truncation (local-time estimator)
  unsigned threads = 1;
  std::int64_t step_budget = 100'000'000;
  std::size_t blocks = 100;
  double max_censored = 0.01;
};

/// Monte Carlo point-to-hyperplane exponent -(1/k) ln E[exp(-gamma Hbar(kl))].
///
/// Paths are drawn from the walk tilted by theta (default sqrt(2 d gamma)/|l|_2,
/// the small-gamma optimum) and reweighted by exp(-theta S(n).l + n f(theta)).
/// One path serves every k of the range.
inline ExponentEstimate hyperplane_exponent_mc(int d, double gamma, const Direction& ell, KRange kr, std::size_t paths,
                                               std::uint64_t seed, const MonteCarloOptions& opts = {}) {
  check_exponent_args(d, gamma, ell, "hyperplane_exponent_mc");
  kr.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("hyperplane_exponent_mc: gamma must be positive");
  if (paths < 2) throw std::invalid_argument("hyperplane_exponent_mc: need at least 2 paths");
  const double theta = std::isnan(opts.theta) ? std::sqrt(2.0 * d * gamma) / ell.norm2() : opts.theta;
  const double ftheta = step_log_mgf(ell, theta);
  const double ll = ell.self_dot();
  const auto ks = kr.values();
  const std::size_t nk = ks.size();

  struct PathFn {
    const Direction& ell;
    double gamma, theta, ftheta, ll;
    const std::vector<std::int64_t>& ks;
    std::uint64_t seed;
    std::int64_t budget;
    int make_state() const { return 0; }
    void operator()(int, std::size_t p, detail::KSums& acc) const {
      TiltedSteps steps(ell, theta, derive_seed(seed, p));
      detail::WalkState s(ell.dim());
      std::size_t next = 0;
      std::vector<double> w(ks.size(), 0.0);
      while (next < ks.size()) {
        if (s.n >= budget) {
          ++acc.censored;
          break;
        }
        s.apply(steps.next(), ell);
        while (next < ks.size() && s.proj >= static_cast<double>(ks[next]) * ll) {
          const double n = static_cast<double>(s.n);
          w[next] = std::exp(-gamma * n - theta * (s.proj - static_cast<double>(ks[next]) * ll) + n * ftheta);
          ++next;
        }
      }
      for (std::size_t i = 0; i < ks.size(); ++i) {
        acc.sum[i] += w[i];
        acc.sumsq[i] += w[i] * w[i];
        if (i >= next) ++acc.missed[i];
      }
      ++acc.paths;
    }
  } fn{ell, gamma, theta, ftheta, ll, ks, seed, opts.step_budget};

  const auto blocks = detail::run_blocks(paths, nk, opts.blocks, opts.threads, fn);
  std::vector<double> offset(nk);
  for (std::size_t i = 0; i < nk; ++i) offset[i] = theta * static_cast<double>(ks[i]) * ll;
  auto e = detail::finish_mc(blocks, ks, offset, 0.0, Method::hyperplane_mc, opts.max_censored);
  e.seed = seed;
  return e;
}

// ---------------------------------------------------------------------------
// Annealed exponent through local times

namespace detail {

/// Visit counter: a dense window around the segment [0, k_max l] plus a
/// sparse map for excursions outside it.
template <int D>
class LocalTimeCounter {
 public:
  using Pos = std::array<std::int64_t, D>;

  LocalTimeCounter(const Pos& lo, const Pos& hi) : lo_(lo), hi_(hi) {
    std::size_t size = 1;
    for (int i = D - 1; i >= 0; --i) {
      stride_[i] = static_cast<std::int64_t>(size);
      size *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    }
    counts_.assign(size, 0);
  }

  void reset(const Pos& pos) {
    for (auto i : touched_) counts_[i] = 0;
    touched_.clear();
    overflow_.clear();
    outside_ = 0;
    idx_ = 0;
    for (int i = 0; i < D; ++i) {
      outside_ += pos[i] < lo_[i] || pos[i] > hi_[i];
      idx_ += (pos[i] - lo_[i]) * stride_[i];
    }
  }

  /// Coordinate `axis` moved by sign from `before`.
  void move(int axis, std::int64_t sign, std::int64_t before) {
    const std::int64_t after = before + sign;
    outside_ += static_cast<int>(after < lo_[axis] || after > hi_[axis]) -
                static_cast<int>(before < lo_[axis] || before > hi_[axis]);
    idx_ += sign * stride_[axis];
  }

  /// Visits so far at the current site, then counts this one.
  std::uint32_t visit(const Pos& pos) {
    if (outside_ == 0) {
      const auto i = static_cast<std::size_t>(idx_);
      const std::uint32_t c = counts_[i]++;
      if (c == 0) touched_.push_back(i);
      return c;
    }
    return overflow_[pos]++;
  }

 private:
  Pos lo_{}, hi_{}, stride_{};
  std::vector<std::uint32_t> counts_;
  std::vector<std::size_t> touched_;
  std::map<Pos, std::uint32_t> overflow_;
  int outside_ = 0;
  std::int64_t idx_ = 0;
};

/// Increments Lambda(j + 1) - Lambda(j), tabulated for small j.
class LambdaIncrements {
 public:
  explicit LambdaIncrements(const PotentialSpec& spec, std::size_t table = 1u << 14) : spec_(spec) {
    inc_.resize(table);
    double prev = 0.0;
    for (std::size_t j = 0; j < table; ++j) {
      const double next = log_mgf(spec, static_cast<double>(j + 1));
      inc_[j] = increment(prev, next);
      prev = next;
    }
  }
  double operator()(std::uint32_t j) const {
    if (j < inc_.size()) return inc_[j];
    return increment(log_mgf(spec_, j), log_mgf(spec_, static_cast<double>(j) + 1.0));
  }

 private:
  static double increment(double a, double b) { return std::isinf(b) ? (std::isinf(a) ? 0.0 : b) : b - a; }
  PotentialSpec spec_;
  std::vector<double> inc_;
};

struct LocalTimeSetup {
  std::vector<std::int64_t> ell;
  std::vector<double> elld;
  std::vector<std::uint64_t> thresholds;  // tilted step law
  std::vector<std::int64_t> lo, hi;       // dense window
  int pivot = 0;                          // axis with the largest |l_i|
  double ftheta = 0.0;
  double stop_level = 0.0;
  KRange kr;
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
};

/// One tilted path per call, specialised on the dimension so the per-step
/// loops unroll.
template <int D>
struct LocalTimeKernel {
  using Pos = std::array<std::int64_t, D>;
  const LocalTimeSetup& cfg;
  const LambdaIncrements& dlam;
  Pos ell{}, lo{}, hi{};
  std::array<double, D> elld{};
  std::array<std::uint64_t, 2 * D - 1> cum{};
  std::size_t nk;

  LocalTimeKernel(const LocalTimeSetup& c, const LambdaIncrements& l) : cfg(c), dlam(l) {
    for (int i = 0; i < D; ++i) {
      ell[i] = c.ell[static_cast<std::size_t>(i)];
      elld[i] = c.elld[static_cast<std::size_t>(i)];
      lo[i] = c.lo[static_cast<std::size_t>(i)];
      hi[i] = c.hi[static_cast<std::size_t>(i)];
    }
    std::copy(c.thresholds.begin(), c.thresholds.end(), cum.begin());
    nk = static_cast<std::size_t>(c.kr.hi - c.kr.lo + 1);
  }

  struct State {
    LocalTimeCounter<D> counter;
    std::vector<char> hit;
  };
  State make_state() const { return {LocalTimeCounter<D>(lo, hi), std::vector<char>(nk, 0)}; }

  /// Index of k in the range if pos = k l, else -1.
  std::int64_t target_index(const Pos& pos) const {
    const std::int64_t lp = ell[cfg.pivot], xp = pos[cfg.pivot];
    for (int i = 0; i < D; ++i)
      if (pos[i] * lp != xp * ell[i]) return -1;
    if (xp % lp != 0) return -1;
    const std::int64_t k = xp / lp;
    return k < cfg.kr.lo || k > cfg.kr.hi ? -1 : k - cfg.kr.lo;
  }

  void operator()(State& st, std::size_t p, KSums& acc) const {
    Engine eng(derive_seed(cfg.seed, p));
    Pos pos{};
    st.counter.reset(pos);
    std::fill(st.hit.begin(), st.hit.end(), 0);
    std::size_t remaining = nk;
    double proj = 0.0, logscore = 0.0;
    std::int64_t n = 0;
    for (;;) {
      const std::int64_t t = target_index(pos);
      if (t >= 0 && !st.hit[static_cast<std::size_t>(t)]) {
        const auto ti = static_cast<std::size_t>(t);
        st.hit[ti] = 1;
        const double w = std::exp(logscore + static_cast<double>(n) * cfg.ftheta);
        acc.sum[ti] += w;
        acc.sumsq[ti] += w * w;
        if (--remaining == 0) break;
      }
      logscore -= dlam(st.counter.visit(pos));
      if (logscore == -std::numeric_limits<double>::infinity() || proj > cfg.stop_level) break;
      if (n >= cfg.budget) {
        ++acc.censored;
        break;
      }
      const std::uint64_t u = eng();
      int step = 0;
      for (int i = 0; i < 2 * D - 1; ++i) step += u >= cum[i];
      const int axis = step >> 1;
      const std::int64_t sign = 2 * (step & 1) - 1;
      st.counter.move(axis, sign, pos[axis]);
      pos[axis] += sign;
      proj += static_cast<double>(sign) * elld[axis];
      ++n;
    }
    for (std::size_t i = 0; i < nk; ++i) acc.missed[i] += !st.hit[i];
    ++acc.paths;
  }
};

template <int D>
std::vector<KSums> run_localtime(const LocalTimeSetup& cfg, const LambdaIncrements& dlam, std::size_t paths,
                                 const MonteCarloOptions& opts) {
  LocalTimeKernel<D> kernel(cfg, dlam);
  return run_blocks(paths, kernel.nk, opts.blocks, opts.threads, kernel);
}

}  // namespace detail

/// Annealed exponent -(1/k) ln E[e(0, kl, V)] computed without sampling the
/// potential: for a walk with local times L(x) up to H(kl), averaging over the
/// i.i.d. potential gives exactly exp(-sum_x Lambda(L(x))), Lambda = log_mgf.
///
/// The walk is tilted by theta with f_l(theta) = Lambda(1), which makes the
/// reweighted score exp(n Lambda(1) - sum_x Lambda(L(x))) >= 1 of order one.
/// A path stops once every target is hit or its projection is more than
/// margin_nats / (2 theta) past the last target: exp(-2 theta S.l) is a
/// martingale of the tilted walk, so it returns with probability below
/// exp(-margin_nats).
inline ExponentEstimate annealed_exponent_localtime(const PotentialSpec& spec, const Site& ell_site, KRange kr,
                                                    std::size_t paths, std::uint64_t seed,
                                                    const MonteCarloOptions& opts = {}) {
  spec.validate();
  kr.validate();
  if (!has_closed_form_log_mgf(spec))
    throw std::invalid_argument("annealed_exponent_localtime: spec needs a closed-form log-MGF");
  if (ell_site.is_origin()) throw std::invalid_argument("annealed_exponent_localtime: l must be non-zero");
  if (paths < 2) throw std::invalid_argument("annealed_exponent_localtime: need at least 2 paths");
  const int d = ell_site.dim();
  if (d > kMaxDim) throw std::invalid_argument("annealed_exponent_localtime: unsupported dimension");
  const Direction ell(ell_site);
  const double lambda1 = log_mgf(spec, 1.0);
  if (!std::isfinite(lambda1)) throw std::invalid_argument("annealed_exponent_localtime: Lambda(1) is infinite");
  const double theta = std::isnan(opts.theta) ? step_mgf_inverse(ell, lambda1).s : opts.theta;
  if (!(theta > 0.0)) throw std::invalid_argument("annealed_exponent_localtime: tilt must be positive");

  detail::LocalTimeSetup cfg;
  cfg.ell = ell_site.coords();
  cfg.elld = ell.components();
  cfg.thresholds = tilt_thresholds(ell, theta);
  cfg.ftheta = step_log_mgf(ell, theta);
  const double ll = ell.self_dot();
  const double margin = opts.margin_nats / (2.0 * theta);
  cfg.stop_level = static_cast<double>(kr.hi) * ll + margin;
  cfg.kr = kr;
  cfg.seed = seed;
  cfg.budget = opts.step_budget;
  for (int i = 0; i < d; ++i)
    if (std::llabs(ell_site[i]) > std::llabs(ell_site[cfg.pivot])) cfg.pivot = i;

  // Dense window: the segment's bounding box widened by a few transverse
  // standard deviations of the tilted walk, capped in volume.
  double drift = 0.0;
  for (int i = 0; i < d; ++i) drift += ell[i] * std::sinh(theta * ell[i]);
  drift /= d * std::exp(cfg.ftheta);
  const double length = cfg.stop_level / std::max(drift, 1e-12);
  std::int64_t pad = 16 + static_cast<std::int64_t>(4.0 * std::sqrt(length / d));
  for (;;) {
    cfg.lo.assign(static_cast<std::size_t>(d), 0);
    cfg.hi.assign(static_cast<std::size_t>(d), 0);
    double vol = 1.0;
    for (int i = 0; i < d; ++i) {
      const auto a = static_cast<std::size_t>(i);
      const std::int64_t end = kr.hi * ell_site[i];
      const auto over = static_cast<std::int64_t>(std::ceil(margin));
      cfg.lo[a] = std::min<std::int64_t>(0, end) - pad - (ell_site[i] < 0 ? over : 0);
      cfg.hi[a] = std::max<std::int64_t>(0, end) + pad + (ell_site[i] > 0 ? over : 0);
      vol *= static_cast<double>(cfg.hi[a] - cfg.lo[a] + 1);
    }
    if (vol <= 8.0e6 || pad <= 8) break;
    pad /= 2;
  }

  const detail::LambdaIncrements dlam(spec);
  std::vector<detail::KSums> blocks;
  switch (d) {
    case 1: blocks = detail::run_localtime<1>(cfg, dlam, paths, opts); break;
    case 2: blocks = detail::run_localtime<2>(cfg, dlam, paths, opts); break;
    case 3: blocks = detail::run_localtime<3>(cfg, dlam, paths, opts); break;
    case 4: blocks = detail::run_localtime<4>(cfg, dlam, paths, opts); break;
    case 5: blocks = detail::run_localtime<5>(cfg, dlam, paths, opts); break;
    case 6: blocks = detail::run_localtime<6>(cfg, dlam, paths, opts); break;
    case 7: blocks = detail::run_localtime<7>(cfg, dlam, paths, opts); break;
    default: blocks = detail::run_localtime<8>(cfg, dlam, paths, opts); break;
  }
  const auto ks = kr.values();
  std::vector<double> offset(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) offset[i] = theta * static_cast<double>(ks[i]) * ll;
  auto e = detail::finish_mc(blocks, ks, offset, prefactor_power(d, true), Method::annealed_localtime, opts.max_censored);
  e.seed = seed;
  return e;
}

// ---------------------------------------------------------------------------
// Solver-based estimators

struct SolverEstimatorOptions {
  std::vector<std::int64_t> box_schedule{};  // radii; the largest is the main box
  SolveOptions solve{};
  double truncation_threshold = 0.05;  // max relative change between the two largest boxes
  unsigned threads = 1;
};

/// u_s(0) = e(0, k l, V_s) restricted to the box, for every potential sample s
/// and every k. Fields come from sample_field(spec, box, derive_seed(seed, s)),
/// so the same sample on nested boxes agrees on the common sites.
struct PassageTable {
  std::vector<std::int64_t> ks;
  std::int64_t radius = 0;
  std::vector<std::vector<double>> u;  // [sample][k index]
};

inline PassageTable passage_table(const PotentialSpec& spec, const Site& ell, KRange kr, std::size_t samples,
                                  std::int64_t radius, const SolveOptions& solve, std::uint64_t seed,
                                  unsigned threads = 1) {
  spec.validate();
  kr.validate();
  if (samples < 1) throw std::invalid_argument("passage_table: need at least one sample");
  if (ell.is_origin()) throw std::invalid_argument("passage_table: l must be non-zero");
  const int d = ell.dim();
  const BoxRegion box(d, radius);
  PassageTable t;
  t.ks = kr.values();
  t.radius = radius;
  for (auto k : t.ks)
    if (!box.is_interior(ell.scaled(k)))
      throw std::invalid_argument("passage_table: target " + ell.scaled(k).str() + " is not interior to the radius-" +
                                  std::to_string(radius) + " box");
  t.u.assign(samples, std::vector<double>(t.ks.size()));
  parallel_for(samples, threads, [&](std::size_t s) {
    const auto v = sample_field(spec, box, derive_seed(seed, s));
    for (std::size_t i = 0; i < t.ks.size(); ++i)
      t.u[s][i] = solve_passage(v, ell.scaled(t.ks[i]), solve).field.at(Site::origin(d));
  });
  return t;
}

namespace detail {

inline std::vector<double> neg_log(const std::vector<double>& u) {
  std::vector<double> y(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) y[i] = -std::log(u[i]);
  return y;
}

inline ExponentEstimate quenched_from_table(const PassageTable& t, int d) {
  ExponentEstimate e;
  e.method = Method::quenched_solver;
  e.k_range = {t.ks.front(), t.ks.back()};
  e.samples = t.u.size();
  const double power = prefactor_power(d, true);
  std::vector<double> slopes, first, second;
  std::vector<double> mean_curve(t.ks.size(), 0.0);
  for (const auto& row : t.u) {
    const auto y = neg_log(row);
    const auto f = fit_decay_curve(t.ks, y, {}, power);
    slopes.push_back(f.slope);
    first.push_back(f.first_half);
    for (std::size_t i = 0; i < y.size(); ++i) mean_curve[i] += y[i] / static_cast<double>(t.u.size());
  }
  e.value = sample_mean(slopes);
  e.stat_error = standard_error(slopes);
  e.first_half_slope = sample_mean(first);
  e.second_half_slope = e.value;
  e.ks = t.ks;
  e.curve = mean_curve;
  return e;
}

inline ExponentEstimate annealed_from_table(const PassageTable& t, int d) {
  ExponentEstimate e;
  e.method = Method::annealed_direct;
  e.k_range = {t.ks.front(), t.ks.back()};
  e.samples = t.u.size();
  const double power = prefactor_power(d, true);
  auto curve_without = [&](std::optional<std::size_t> skip) {
    std::vector<double> m(t.ks.size(), 0.0);
    double n = 0.0;
    for (std::size_t s = 0; s < t.u.size(); ++s) {
      if (skip && *skip == s) continue;
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += t.u[s][i];
      n += 1.0;
    }
    for (auto& v : m) v /= n;
    return neg_log(m);
  };
  e.ks = t.ks;
  e.curve = curve_without(std::nullopt);
  const auto f = fit_decay_curve(t.ks, e.curve, {}, power);
  e.value = f.slope;
  e.first_half_slope = f.first_half;
  e.second_half_slope = f.second_half;
  if (t.u.size() >= 2) {
    std::vector<double> reps;
    for (std::size_t s = 0; s < t.u.size(); ++s) reps.push_back(fit_decay_curve(t.ks, curve_without(s), {}, power).slope);
    e.stat_error = jackknife_error(reps);
  }
  return e;
}

/// Runs `estimate` on the two largest boxes of the schedule: the value on the
/// largest is reported, both values form the truncation bracket, and a
/// relative change above the threshold is an error.
template <typename Estimate>
ExponentEstimate with_truncation_bracket(const SolverEstimatorOptions& opts, Estimate&& estimate) {
  auto radii = opts.box_schedule;
  if (radii.empty()) throw std::invalid_argument("box_schedule must list at least one radius");
  std::sort(radii.begin(), radii.end());
  auto e = estimate(radii.back());
  if (radii.size() >= 2) {
    const auto coarse = estimate(radii[radii.size() - 2]);
    e.truncation_bracket = std::make_pair(std::min(e.value, coarse.value), std::max(e.value, coarse.value));
    const double rel = std::abs(coarse.value - e.value) / std::max(std::abs(e.value), 1e-300);
    if (rel > opts.truncation_threshold)
      throw TruncationError("box truncation changed the estimate by " + std::to_string(rel) + " (radius " +
                            std::to_string(radii[radii.size() - 2]) + " vs " + std::to_string(radii.back()) + ")");
  }
  return e;
}

inline void require_finite_mean(const PotentialSpec& spec, const char* who) {
  if (!std::isfinite(mean(spec)))
    throw std::invalid_argument(std::string(who) + ": the quenched exponent needs E[V(0)] < infinity; " +
                                spec.describe() + " has infinite mean");
}

}  // namespace detail

/// Quenched exponent: per potential sample, the slope of -ln u(0) over k;
/// averaged over samples (common random potentials across k).
inline ExponentEstimate quenched_exponent(const PotentialSpec& spec, const Site& ell, KRange kr, std::size_t samples,
                                          const SolverEstimatorOptions& opts, std::uint64_t seed) {
  detail::require_finite_mean(spec, "quenched_exponent");
  auto e = detail::with_truncation_bracket(opts, [&](std::int64_t r) {
    return detail::quenched_from_table(passage_table(spec, ell, kr, samples, r, opts.solve, seed, opts.threads), ell.dim());
  });
  e.seed = seed;
  return e;
}

/// Annealed exponent from the potential-averaged passage function.
inline ExponentEstimate annealed_exponent_direct(const PotentialSpec& spec, const Site& ell, KRange kr,
                                                 std::size_t samples, const SolverEstimatorOptions& opts,
                                                 std::uint64_t seed) {
  auto e = detail::with_truncation_bracket(opts, [&](std::int64_t r) {
    return detail::annealed_from_table(passage_table(spec, ell, kr, samples, r, opts.solve, seed, opts.threads), ell.dim());
  });
  e.seed = seed;
  return e;
}

struct MatchedPair {
  ExponentEstimate quenched;
  ExponentEstimate annealed;
};

/// Quenched and annealed estimates from one shared passage table, so that the
/// Jensen comparison is made on identical potential samples.
inline MatchedPair quenched_annealed_pair(const PotentialSpec& spec, const Site& ell, KRange kr, std::size_t samples,
                                          const SolverEstimatorOptions& opts, std::uint64_t seed) {
  detail::require_finite_mean(spec, "quenched_annealed_pair");
  auto radii = opts.box_schedule;
  if (radii.empty()) throw std::invalid_argument("box_schedule must list at least one radius");
  std::sort(radii.begin(), radii.end());
  std::vector<PassageTable> tables;
  for (std::size_t i = radii.size() >= 2 ? radii.size() - 2 : 0; i < radii.size(); ++i)
    tables.push_back(passage_table(spec, ell, kr, samples, radii[i], opts.solve, seed, opts.threads));
  // Re-run the bracket logic over the precomputed tables, indexed 1..n.
  auto reuse = [&](auto&& from_table) {
    SolverEstimatorOptions o = opts;
    o.box_schedule = {};
    for (std::size_t i = 0; i < tables.size(); ++i) o.box_schedule.push_back(static_cast<std::int64_t>(i + 1));
    return detail::with_truncation_bracket(
        o, [&](std::int64_t r) { return from_table(tables[static_cast<std::size_t>(r - 1)], ell.dim()); });
  };
  MatchedPair out{reuse(detail::quenched_from_table), reuse(detail::annealed_from_table)};
  out.quenched.seed = out.annealed.seed = seed;
  return out;
}

struct OperatorExponents {
  ExponentEstimate A;  // quenched exponent of ln(V + 1)
  ExponentEstimate B;  // annealed exponent of ln(V + 1)
};

/// Exponents of the operator Green's function, via G(0, y, V) = g(0, y, ln(V + 1)).
inline OperatorExponents operator_exponents(const PotentialSpec& spec, const Site& ell, KRange kr, std::size_t samples,
                                            const SolverEstimatorOptions& opts, std::uint64_t seed) {
  const auto w = operator_transform(spec);
  auto pair = quenched_annealed_pair(w, ell, kr, samples, opts, seed);
  return {pair.quenched, pair.annealed};
}

}  // namespace lyap
