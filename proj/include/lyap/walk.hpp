#pragma once

// Streamed simulation of the simple symmetric random walk S on Z^d started at
// the origin. Paths are never stored; a WalkRecord keeps only the statistics a
// caller asked for.
//
// Conventions:
//   T_0 = 0, T_{k+1} = inf{n > T_k : S(n).l >= S(T_k).l + gamma^{-1/2}}
//   H(y)   = inf{n >= 0 : S(n) = y}
//   Hbar(kl) = inf{n >= 0 : S(n).l >= k l.l}
// Projections are accumulated step by step; they are exact whenever the
// components of l and gamma^{-1/2} are dyadic rationals, which is what the
// exact path-invariant tests use.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "lyap/errors.hpp"
#include "lyap/lattice.hpp"
#include "lyap/parallel.hpp"
#include "lyap/potential.hpp"
#include "lyap/rng.hpp"
#include "lyap/stats.hpp"

namespace lyap {

inline constexpr std::int64_t kDefaultStepBudget = 1'000'000'000;

struct WalkRecord {
  std::int64_t steps_taken = 0;
  std::vector<std::int64_t> stop_times;  // T_0 = 0, T_1, ...
  std::vector<double> projections;       // S(T_k).l
  std::optional<std::int64_t> hit_step;        // H(kl)
  std::optional<std::int64_t> halfspace_step;  // Hbar(kl)
  std::optional<double> halfspace_projection;  // S(Hbar(kl)).l
  double weight_log = 0.0;  // -sum_{n < H} V(S(n)); -inf when absorbed
  bool absorbed = false;
  Site end;
  std::map<Site, std::int64_t> local_times;  // visits during [0, H)
};

/// Uniform choice among the 2d unit steps, drawing as few bits as possible.
/// Step j moves along axis j/2, in the negative direction for even j.
class UniformSteps {
 public:
  UniformSteps(int dim, std::uint64_t seed) : eng_(seed), n_(2u * static_cast<unsigned>(dim)) {
    while ((1u << bits_) < n_) ++bits_;
    mask_ = (1ULL << bits_) - 1;
  }
  int next() {
    for (;;) {
      if (left_ < bits_) {
        buf_ = eng_();
        left_ = 64;
      }
      const auto v = static_cast<unsigned>(buf_ & mask_);
      buf_ >>= bits_;
      left_ -= bits_;
      if (v < n_) return static_cast<int>(v);
    }
  }
  Engine& engine() { return eng_; }

 private:
  Engine eng_;
  unsigned n_;
  int bits_ = 0;
  std::uint64_t mask_ = 0;
  std::uint64_t buf_ = 0;
  int left_ = 0;
};

/// Cumulative thresholds of the tilted step law P(e) ~ exp(theta e.l) on the
/// full 64-bit range, in step order; 2d - 1 entries. The step index of a raw
/// draw u is the number of thresholds <= u.
inline std::vector<std::uint64_t> tilt_thresholds(const Direction& ell, double theta) {
  std::vector<double> w;
  double tot = 0.0;
  for (int i = 0; i < ell.dim(); ++i)
    for (int s : {-1, 1}) {
      w.push_back(std::exp(theta * s * ell[i]));
      tot += w.back();
    }
  std::vector<std::uint64_t> cum;
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < w.size(); ++j) {
    acc += w[j] / tot;
    cum.push_back(acc >= 1.0 ? ~0ULL : static_cast<std::uint64_t>(std::ldexp(acc, 64)));
  }
  return cum;
}

/// Exponentially tilted steps: P(step e) = exp(theta e.l) / sum_e' exp(theta e'.l).
/// The likelihood ratio of n tilted steps back to the symmetric walk is
/// exp(-theta S(n).l + n f(theta)), f(t) = ln((1/d) sum_i cosh(t l_i)).
class TiltedSteps {
 public:
  TiltedSteps(const Direction& ell, double theta, std::uint64_t seed) : eng_(seed) {
    const auto cum = tilt_thresholds(ell, theta);
    n_ = static_cast<int>(cum.size());
    std::copy(cum.begin(), cum.end(), cum_.begin());
  }
  int next() {
    const std::uint64_t u = eng_();
    int j = 0;
    for (int i = 0; i < n_; ++i) j += u >= cum_[static_cast<std::size_t>(i)];
    return j;
  }

 private:
  Engine eng_;
  std::array<std::uint64_t, 2 * kMaxDim> cum_{};
  int n_ = 0;
};

/// f_l(t) = ln E[exp(t S(1).l)] = ln((1/d) sum_i cosh(t l_i)).
inline double step_log_mgf(const Direction& ell, double t) {
  double s = 0.0;
  for (int i = 0; i < ell.dim(); ++i) s += std::cosh(t * ell[i]);
  return std::log(s / ell.dim());
}

/// m_k(gamma) = floor(k l.l / (gamma^{-1/2} + |l|_inf)).
inline std::int64_t slab_lower_count(const Direction& ell, double gamma, std::int64_t k) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(k) * ell.self_dot() / (1.0 / std::sqrt(gamma) + ell.norm_inf())));
}

/// M_k(gamma) = ceil((k l.l + |l|_inf) gamma^{1/2}).
inline std::int64_t slab_upper_count(const Direction& ell, double gamma, std::int64_t k) {
  return static_cast<std::int64_t>(std::ceil((static_cast<double>(k) * ell.self_dot() + ell.norm_inf()) * std::sqrt(gamma)));
}

namespace detail {

inline void check_walk_args(const Direction& ell, double gamma, const char* who) {
  ell.require_nonzero(who);
  if (ell.dim() < 1 || ell.dim() > kMaxDim) throw std::invalid_argument(std::string(who) + ": unsupported dimension");
  if (!(gamma > 0.0 && std::isfinite(gamma))) throw std::invalid_argument(std::string(who) + ": gamma must be positive");
}

/// Position plus running projection on l.
struct WalkState {
  Site pos;
  double proj = 0.0;
  std::int64_t n = 0;

  explicit WalkState(int d) : pos(Site::origin(d)) {}
  void apply(int step, const Direction& ell) {
    // Branch-free: the step direction is a coin flip the predictor cannot learn.
    const int axis = step >> 1;
    const std::int64_t sign = 2 * (step & 1) - 1;
    pos[axis] += sign;
    proj += static_cast<double>(sign) * ell[axis];
    ++n;
  }
};

/// Records T_{j+1} when the projection clears the previous record by h.
struct StopTracker {
  double h;
  void observe(const WalkState& s, WalkRecord& rec) const {
    if (s.proj >= rec.projections.back() + h) {
      rec.stop_times.push_back(s.n);
      rec.projections.push_back(s.proj);
    }
  }
};

}  // namespace detail

/// Simulates until T_K and records T_0..T_K with their projections.
inline WalkRecord run_to_stop_count(int d, const Direction& ell, double gamma, std::int64_t K, std::uint64_t seed,
                                    std::int64_t budget = kDefaultStepBudget) {
  detail::check_walk_args(ell, gamma, "run_to_stop_count");
  if (ell.dim() != d) throw std::invalid_argument("run_to_stop_count: dimension mismatch");
  if (K < 1) throw std::invalid_argument("run_to_stop_count: K must be >= 1");
  WalkRecord rec;
  rec.stop_times = {0};
  rec.projections = {0.0};
  const detail::StopTracker stops{1.0 / std::sqrt(gamma)};
  UniformSteps steps(d, seed);
  detail::WalkState s(d);
  while (static_cast<std::int64_t>(rec.stop_times.size()) <= K) {
    if (s.n >= budget) throw BudgetExceeded("run_to_stop_count: step budget exhausted before T_K", budget);
    s.apply(steps.next(), ell);
    stops.observe(s, rec);
  }
  rec.steps_taken = s.n;
  rec.end = s.pos;
  return rec;
}

/// Simulates until Hbar(kl) and on until T_{M_k}, so that the bracket
/// T_{m_k} <= Hbar(kl) <= T_{M_k} can be checked on the record. H(kl) is
/// recorded too if kl is a lattice point visited during the run.
inline WalkRecord run_to_halfspace(int d, const Direction& ell, double gamma, std::int64_t k, std::uint64_t seed,
                                   std::int64_t budget = kDefaultStepBudget) {
  detail::check_walk_args(ell, gamma, "run_to_halfspace");
  if (ell.dim() != d) throw std::invalid_argument("run_to_halfspace: dimension mismatch");
  if (k < 0) throw std::invalid_argument("run_to_halfspace: k must be >= 0");
  WalkRecord rec;
  rec.stop_times = {0};
  rec.projections = {0.0};
  const double level = static_cast<double>(k) * ell.self_dot();
  const std::int64_t upper = slab_upper_count(ell, gamma, k);
  Site target;
  const bool point = ell.lattice_multiple(k, &target);
  const detail::StopTracker stops{1.0 / std::sqrt(gamma)};
  UniformSteps steps(d, seed);
  detail::WalkState s(d);
  auto observe = [&] {
    if (!rec.halfspace_step && s.proj >= level) {
      rec.halfspace_step = s.n;
      rec.halfspace_projection = s.proj;
    }
    if (point && !rec.hit_step && s.pos == target) rec.hit_step = s.n;
  };
  observe();
  while (!rec.halfspace_step || static_cast<std::int64_t>(rec.stop_times.size()) <= upper) {
    if (s.n >= budget) throw BudgetExceeded("run_to_halfspace: step budget exhausted", budget);
    s.apply(steps.next(), ell);
    stops.observe(s, rec);
    observe();
  }
  rec.steps_taken = s.n;
  rec.end = s.pos;
  return rec;
}

/// Runs the walk in the potential until it first hits kl or reaches the
/// absorbing layer of the potential's box. Accumulates -sum_{n<H} V(S(n)) and
/// the local times of [0, H).
inline WalkRecord run_to_hit(int d, const Direction& ell, std::int64_t k, const ScalarField& potential,
                             std::uint64_t seed, std::int64_t budget = kDefaultStepBudget,
                             bool record_local_times = true) {
  if (ell.dim() != d || potential.box.dim() != d) throw std::invalid_argument("run_to_hit: dimension mismatch");
  Site target;
  if (!ell.lattice_multiple(k, &target)) throw std::invalid_argument("run_to_hit: k*l is not a lattice point");
  if (!potential.box.contains(target)) throw std::invalid_argument("run_to_hit: target outside the box");
  WalkRecord rec;
  UniformSteps steps(d, seed);
  detail::WalkState s(d);
  for (;;) {
    if (s.pos == target) {
      rec.hit_step = s.n;
      break;
    }
    if (!potential.box.is_interior(s.pos)) {
      rec.absorbed = true;
      rec.weight_log = -std::numeric_limits<double>::infinity();
      break;
    }
    if (s.n >= budget) throw BudgetExceeded("run_to_hit: step budget exhausted", budget);
    rec.weight_log -= potential.at(s.pos);
    if (record_local_times) ++rec.local_times[s.pos];
    s.apply(steps.next(), ell);
  }
  rec.steps_taken = s.n;
  rec.end = s.pos;
  return rec;
}

/// Zero potential on all of Z^d: runs until H(kl). Finite a.s. only for d <= 2.
inline WalkRecord run_to_hit(int d, const Direction& ell, std::int64_t k, std::uint64_t seed,
                             std::int64_t budget = kDefaultStepBudget, bool record_local_times = true) {
  if (ell.dim() != d) throw std::invalid_argument("run_to_hit: dimension mismatch");
  Site target;
  if (!ell.lattice_multiple(k, &target)) throw std::invalid_argument("run_to_hit: k*l is not a lattice point");
  WalkRecord rec;
  UniformSteps steps(d, seed);
  detail::WalkState s(d);
  while (s.pos != target) {
    if (s.n >= budget) throw BudgetExceeded("run_to_hit: step budget exhausted", budget);
    if (record_local_times) ++rec.local_times[s.pos];
    s.apply(steps.next(), ell);
  }
  rec.hit_step = s.n;
  rec.steps_taken = s.n;
  rec.end = s.pos;
  return rec;
}

// ---------------------------------------------------------------------------
// Slab pieces

struct SlabReport {
  std::size_t paths = 0;
  std::size_t dropped = 0;  // paths that hit the step budget before T_K
  std::int64_t K = 0;
  std::vector<std::vector<std::int64_t>> increments;  // [kept path][i-1] = T_i - T_{i-1}
  double correlation = 0.0;        // Spearman rank correlation of T_1 and T_2 - T_1
  double correlation_stderr = 0.0;  // 1/sqrt(n-1) under independence
  double max_consecutive_z = 0.0;  // max over i of |corr(T_i - T_{i-1}, T_{i+1} - T_i)| / stderr
  double ks_statistic = 0.0;       // between {T_1} and {T_2 - T_1}
  double ks_critical = 0.0;        // at level 1e-3
  bool empty() const { return K < 2; }
  bool independent(double z = 4.0) const { return empty() || max_consecutive_z <= z; }
  bool identically_distributed() const { return empty() || ks_statistic <= ks_critical; }
};

/// Statistics of the slab increments T_i - T_{i-1} over `paths` paths.
/// Ranks are used because the increments are heavy tailed (P(T_1 > n) ~ n^{-1/2}),
/// which also means a few paths always exhaust any step budget. Those are
/// dropped: given their sum, i.i.d. pieces stay exchangeable, so the
/// identical-distribution test is unaffected, and the conditioning on a sum
/// below the budget perturbs independence only at the (reported) drop rate.
inline SlabReport slab_pieces_statistics(int d, const Direction& ell, double gamma, std::int64_t K, std::size_t paths,
                                         std::uint64_t seed, unsigned threads = 1,
                                         std::int64_t budget = kDefaultStepBudget) {
  SlabReport rep;
  rep.K = K;
  if (K < 2) return rep;
  std::vector<std::vector<std::int64_t>> all(paths);
  parallel_for(paths, threads, [&](std::size_t p) {
    try {
      const auto rec = run_to_stop_count(d, ell, gamma, K, derive_seed(seed, p), budget);
      auto& inc = all[p];
      for (std::int64_t i = 1; i <= K; ++i)
        inc.push_back(rec.stop_times[static_cast<std::size_t>(i)] - rec.stop_times[static_cast<std::size_t>(i - 1)]);
    } catch (const BudgetExceeded&) {
    }
  });
  for (auto& inc : all) {
    if (inc.empty()) ++rep.dropped;
    else rep.increments.push_back(std::move(inc));
  }
  rep.paths = rep.increments.size();
  if (rep.paths < 2) throw BudgetExceeded("slab_pieces_statistics: fewer than two paths reached T_K", budget);
  paths = rep.paths;
  auto column = [&](std::int64_t i) {
    std::vector<double> c;
    c.reserve(paths);
    for (const auto& inc : rep.increments) c.push_back(static_cast<double>(inc[static_cast<std::size_t>(i)]));
    return c;
  };
  const auto a = column(0), b = column(1);
  rep.correlation = spearman(a, b);
  rep.correlation_stderr = 1.0 / std::sqrt(static_cast<double>(paths) - 1.0);
  for (std::int64_t i = 0; i + 1 < K; ++i)
    rep.max_consecutive_z =
        std::max(rep.max_consecutive_z, std::abs(spearman(column(i), column(i + 1))) / rep.correlation_stderr);
  rep.ks_statistic = ks_statistic(a, b);
  rep.ks_critical = ks_critical_value(paths, paths, 1e-3);
  return rep;
}

// ---------------------------------------------------------------------------
// Laplace transform of T_1

/// One unbiased sample of E[exp(-c gamma T_1)], T_1 the first time S.l >= gamma^{-1/2}.
///
/// Killing at rate c*gamma is deferred: up to n0 = ceil(1/(c gamma)) steps the
/// exact weight exp(-c gamma T_1) is used; past n0 the walk is killed at an
/// independent geometric time G with P(G >= m) = exp(-c gamma m). The score
/// exp(-c gamma min(T_1, n0)) 1{T_1 <= n0 + G} has the right mean and bounded
/// cost even though E[T_1] = inf in d <= 2.
inline double laplace_sample(int d, const Direction& ell, double gamma, double c, std::uint64_t seed,
                             std::int64_t budget = kDefaultStepBudget) {
  const double rate = c * gamma;
  const auto n0 = static_cast<std::int64_t>(std::ceil(1.0 / rate));
  UniformSteps steps(d, seed);
  const double extra = -std::log(to_unit_open_low(steps.engine()())) / rate;
  const std::int64_t limit = n0 + static_cast<std::int64_t>(std::min(std::floor(extra), 9e18 - static_cast<double>(n0)));
  const double h = 1.0 / std::sqrt(gamma);
  detail::WalkState s(d);
  while (s.proj < h) {
    if (s.n >= limit) return 0.0;
    if (s.n >= budget) throw BudgetExceeded("laplace_sample: step budget exhausted", budget);
    s.apply(steps.next(), ell);
  }
  return std::exp(-rate * static_cast<double>(std::min(s.n, n0)));
}

struct MeanEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo mean of laplace_sample over `paths` independent paths.
inline MeanEstimate laplace_estimate(int d, const Direction& ell, double gamma, double c, std::size_t paths,
                                     std::uint64_t seed, unsigned threads = 1,
                                     std::int64_t budget = kDefaultStepBudget) {
  detail::check_walk_args(ell, gamma, "laplace_estimate");
  if (!(c > 0.0)) throw std::invalid_argument("laplace_estimate: c must be positive");
  if (paths < 2) throw std::invalid_argument("laplace_estimate: need at least 2 paths");
  std::vector<double> x(paths);
  parallel_for(paths, threads, [&](std::size_t p) { x[p] = laplace_sample(d, ell, gamma, c, derive_seed(seed, p), budget); });
  return {sample_mean(x), standard_error(x), paths};
}

/// lim_{gamma -> 0} E[exp(-c gamma T_1)] = exp(-sqrt(2 d c) / |l|_2).
inline double laplace_limit(int d, const Direction& ell, double c) {
  return std::exp(-std::sqrt(2.0 * d * c) / ell.norm2());
}

}  // namespace lyap
