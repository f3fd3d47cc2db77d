#pragma once

// Exact finite-box evaluation of the killed-walk functions.
//
//   passage  u(x) = e^{-V(x)} (1/2d) sum_e u(x+e),  u(y) = 1
//   green    g(x) = e^{-V(x)} (delta_{x,y} + (1/2d) sum_e g(x+e))
//   operator G(x) = (delta_{x,y} + (1/2d) sum_e G(x+e)) / (1 + W(x))
//
// on the interior of a box whose outer layer is absorbing (value 0). All three
// are fixed points of a monotone map with nonnegative coefficients; iterating
// from zero gives increasing lower bounds.
//
// The residual is the pointwise-relative sup norm |T(u) - u| / max(|T(u)|, floor)
// because the interesting values decay like e^{-alpha k} and an absolute
// 1e-12 would say nothing about them.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyap/errors.hpp"
#include "lyap/lattice.hpp"
#include "lyap/potential.hpp"

namespace lyap {

enum class SolveMethod { jacobi, gauss_seidel, direct };

inline std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::jacobi: return "jacobi";
    case SolveMethod::gauss_seidel: return "gauss_seidel";
    case SolveMethod::direct: return "direct";
  }
  return "?";
}

inline SolveMethod solve_method_from_string(const std::string& s) {
  if (s == "jacobi") return SolveMethod::jacobi;
  if (s == "gauss_seidel") return SolveMethod::gauss_seidel;
  if (s == "direct") return SolveMethod::direct;
  throw std::invalid_argument("unknown solve method '" + s + "'");
}

struct SolveOptions {
  double tolerance = 1e-12;
  std::int64_t max_sweeps = 1'000'000;
  SolveMethod method = SolveMethod::jacobi;

  void validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("SolveOptions: tolerance must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("SolveOptions: max_sweeps must be >= 1");
  }
};

/// Values below this are compared absolutely in the residual.
inline constexpr double kResidualFloor = 1e-280;

struct FieldSolution {
  ScalarField field;
  double residual = 0.0;      // final fixed-point residual
  std::int64_t sweeps_used = 0;
  double contraction = 0.0;   // last ratio of successive sweep residuals
};

using PassageSolution = FieldSolution;

namespace detail {

/// x = a .* (s + avg_neighbours(x)) on the interior, except one optional
/// pinned site held at a fixed value.
struct FixedPointProblem {
  BoxRegion box;
  std::vector<double> a;
  std::vector<double> source;
  std::optional<std::size_t> pinned;
  double pinned_value = 1.0;
};

struct Stencil {
  std::vector<std::size_t> active;  // interior, not pinned, a > 0
  std::vector<std::int64_t> offsets;
  double inv2d;

  explicit Stencil(const FixedPointProblem& p) : offsets(p.box.neighbor_offsets()), inv2d(0.5 / p.box.dim()) {
    for (std::size_t i : p.box.interior_indices())
      if (i != p.pinned && p.a[i] > 0.0) active.push_back(i);
  }
  double apply(const FixedPointProblem& p, const std::vector<double>& u, std::size_t i) const {
    double s = 0.0;
    for (auto off : offsets) s += u[static_cast<std::size_t>(static_cast<std::int64_t>(i) + off)];
    return p.a[i] * (p.source[i] + inv2d * s);
  }
};

inline double rel_change(double now, double before) {
  return std::abs(now - before) / std::max(std::abs(now), kResidualFloor);
}

inline double fixed_point_residual(const FixedPointProblem& p, const Stencil& st, const std::vector<double>& u) {
  double r = 0.0;
  for (std::size_t i : st.active) r = std::max(r, rel_change(st.apply(p, u, i), u[i]));
  return r;
}

inline std::vector<double> initial_vector(const FixedPointProblem& p) {
  std::vector<double> u(p.box.size(), 0.0);
  if (p.pinned) u[*p.pinned] = p.pinned_value;
  return u;
}

/// Thomas algorithm for the tridiagonal d = 1 system.
inline std::vector<double> solve_direct_1d(const FixedPointProblem& p) {
  if (p.box.dim() != 1) throw std::invalid_argument("direct solve is only available in d = 1");
  const std::size_t n = p.box.size();
  std::vector<double> lower(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
  std::vector<char> free(n, 0);
  Stencil st(p);
  for (std::size_t i : st.active) {
    free[i] = 1;
    lower[i] = upper[i] = -0.5 * p.a[i];
    rhs[i] = p.a[i] * p.source[i];
  }
  if (p.pinned) rhs[*p.pinned] = p.pinned_value;
  // Forward elimination with unit diagonal rows.
  std::vector<double> cp(n, 0.0), dp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = free[i] ? lower[i] : 0.0;
    const double u = free[i] ? upper[i] : 0.0;
    const double denom = 1.0 - l * (i ? cp[i - 1] : 0.0);
    cp[i] = u / denom;
    dp[i] = (rhs[i] - l * (i ? dp[i - 1] : 0.0)) / denom;
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) x[i] = dp[i] - (i + 1 < n ? cp[i] * x[i + 1] : 0.0);
  return x;
}

inline FieldSolution solve_fixed_point(const FixedPointProblem& p, const SolveOptions& opts, const char* who) {
  opts.validate();
  const Stencil st(p);
  FieldSolution sol;
  sol.field = ScalarField(p.box);
  std::vector<double> u = initial_vector(p);

  if (opts.method == SolveMethod::direct) {
    u = solve_direct_1d(p);
    sol.sweeps_used = 1;
  } else {
    std::vector<double> next = u;
    double prev = std::numeric_limits<double>::infinity();
    for (std::int64_t sweep = 1;; ++sweep) {
      double r = 0.0;
      if (opts.method == SolveMethod::jacobi) {
        for (std::size_t i : st.active) {
          next[i] = st.apply(p, u, i);
          r = std::max(r, rel_change(next[i], u[i]));
        }
        u.swap(next);
      } else {
        for (std::size_t i : st.active) {
          const double v = st.apply(p, u, i);
          r = std::max(r, rel_change(v, u[i]));
          u[i] = v;
        }
      }
      sol.sweeps_used = sweep;
      if (std::isfinite(prev) && prev > 0.0) sol.contraction = r / prev;
      prev = r;
      if (r <= opts.tolerance) break;
      if (sweep >= opts.max_sweeps) throw NonConvergence(std::string(who) + ": no convergence", r, sweep);
    }
  }
  sol.residual = fixed_point_residual(p, st, u);
  if (!(sol.residual <= opts.tolerance) && opts.method != SolveMethod::direct)
    throw NonConvergence(std::string(who) + ": residual above tolerance", sol.residual, sol.sweeps_used);
  sol.field.values = std::move(u);
  return sol;
}

inline std::vector<double> killing_factors(const ScalarField& v) {
  std::vector<double> a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v.values[i] >= 0.0)) throw std::invalid_argument("potential values must be >= 0");
    a[i] = std::exp(-v.values[i]);
  }
  return a;
}

inline void require_interior(const BoxRegion& box, const Site& y, const char* who) {
  if (y.dim() != box.dim()) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  if (!box.is_interior(y)) throw std::invalid_argument(std::string(who) + ": site " + y.str() + " is not interior to the box");
}

}  // namespace detail

/// u(x) = e(x, target, V) restricted to the box: the weight of reaching the
/// target before being killed or absorbed.
inline PassageSolution solve_passage(const ScalarField& potential, const Site& target, const SolveOptions& opts = {}) {
  detail::require_interior(potential.box, target, "solve_passage");
  detail::FixedPointProblem p{potential.box, detail::killing_factors(potential),
                              std::vector<double>(potential.size(), 0.0), potential.box.index(target), 1.0};
  return detail::solve_fixed_point(p, opts, "solve_passage");
}

/// g(., y, V) on the box.
inline FieldSolution solve_green_column(const ScalarField& potential, const Site& y, const SolveOptions& opts = {}) {
  detail::require_interior(potential.box, y, "solve_green_column");
  if (potential.box.dim() <= 2) {
    bool killed = false;
    for (std::size_t i : potential.box.interior_indices()) killed = killed || potential.values[i] > 0.0;
    if (!killed)
      throw IllPosed("solve_green_column: zero potential in d <= 2 has no Green's function on Z^d (recurrence)");
  }
  detail::FixedPointProblem p{potential.box, detail::killing_factors(potential),
                              std::vector<double>(potential.size(), 0.0), std::nullopt, 1.0};
  p.source[potential.box.index(y)] = 1.0;
  return detail::solve_fixed_point(p, opts, "solve_green_column");
}

/// Box solution of (-Delta + W) G = delta_y with G = 0 on the absorbing layer.
inline FieldSolution solve_operator_green(const ScalarField& w, const Site& y, const SolveOptions& opts = {}) {
  detail::require_interior(w.box, y, "solve_operator_green");
  std::vector<double> a(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w.values[i] >= 0.0)) throw std::invalid_argument("solve_operator_green: W must be >= 0");
    a[i] = 1.0 / (1.0 + w.values[i]);
  }
  detail::FixedPointProblem p{w.box, std::move(a), std::vector<double>(w.size(), 0.0), std::nullopt, 1.0};
  p.source[w.box.index(y)] = 1.0;
  return detail::solve_fixed_point(p, opts, "solve_operator_green");
}

/// ln(W + 1) site by site.
inline ScalarField log1p_field(const ScalarField& w) {
  ScalarField out = w;
  for (auto& v : out.values) v = std::log1p(v);
  return out;
}

inline double max_relative_difference(const ScalarField& a, const ScalarField& b) {
  if (!(a.box == b.box)) throw std::invalid_argument("max_relative_difference: boxes differ");
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, detail::rel_change(a.values[i], b.values[i]));
  return r;
}

inline double max_abs_difference(const ScalarField& a, const ScalarField& b) {
  if (!(a.box == b.box)) throw std::invalid_argument("max_abs_difference: boxes differ");
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a.values[i] - b.values[i]));
  return r;
}

struct IdentityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // relative
  bool holds(double tol) const { return residual <= tol; }
};

/// g(x, y) = u_y(x) g(y, y) at every site x of the box; reports the worst
/// relative mismatch and the values at x = 0 when the origin lies in the box.
inline IdentityReport factorization_check(const ScalarField& potential, const Site& y, const SolveOptions& opts = {}) {
  const auto g = solve_green_column(potential, y, opts);
  const auto u = solve_passage(potential, y, opts);
  const double gyy = g.field.at(y);
  IdentityReport rep{"factorization", 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < g.field.size(); ++i)
    rep.residual = std::max(rep.residual, detail::rel_change(g.field.values[i], u.field.values[i] * gyy));
  const Site o = Site::origin(potential.box.dim());
  if (potential.box.contains(o)) {
    rep.lhs = g.field.at(o);
    rep.rhs = u.field.at(o) * gyy;
  }
  return rep;
}

/// G(., y, W) against g(., y, ln(W + 1)).
inline IdentityReport operator_correspondence_check(const ScalarField& w, const Site& y, const SolveOptions& opts = {}) {
  const auto G = solve_operator_green(w, y, opts);
  const auto g = solve_green_column(log1p_field(w), y, opts);
  return {"operator_correspondence", G.field.at(y), g.field.at(y), max_relative_difference(G.field, g.field)};
}

/// g(y, y) = e^{-V(y)} / (1 - r), r = e^{-V(y)} (1/2d) sum_e u_y(y + e): the
/// return weight assembled from one passage solve to y.
inline IdentityReport geometric_return_check(const ScalarField& potential, const Site& y, const SolveOptions& opts = {}) {
  detail::require_interior(potential.box, y, "geometric_return_check");
  const auto u = solve_passage(potential, y, opts);
  const double ky = std::exp(-potential.at(y));
  double r = 0.0;
  for (const auto& z : neighbors(y)) r += u.field.at(z);
  r *= ky / (2.0 * potential.box.dim());
  if (!(r < 1.0)) throw NonConvergence("geometric_return_check: return weight r >= 1", r, u.sweeps_used);
  const auto g = solve_green_column(potential, y, opts);
  const double rhs = ky / (1.0 - r);
  return {"geometric_series", g.field.at(y), rhs, detail::rel_change(g.field.at(y), rhs)};
}

// ---------------------------------------------------------------------------
// Field dumps
//
// CSV: header "x0,...,x{d-1},value", one row per site in index order.
// Binary (little-endian):
//   char[8]  magic "LYAPFLD1"
//   int32    dimension d
//   int32    radius R
//   int64[d] center
//   float64[(2R+1)^d] values in site-index order

inline void write_field_csv(std::ostream& os, const ScalarField& f) {
  const int d = f.box.dim();
  for (int i = 0; i < d; ++i) os << "x" << i << ",";
  os << "value\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Site s = f.box.site(i);
    for (int j = 0; j < d; ++j) os << s[j] << ",";
    os << f.values[i] << "\n";
  }
}

inline constexpr char kFieldMagic[8] = {'L', 'Y', 'A', 'P', 'F', 'L', 'D', '1'};

inline void write_field_binary(std::ostream& os, const ScalarField& f) {
  os.write(kFieldMagic, 8);
  const auto d = static_cast<std::int32_t>(f.box.dim());
  const auto r = static_cast<std::int32_t>(f.box.radius());
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&r), sizeof r);
  for (int i = 0; i < d; ++i) {
    const std::int64_t c = f.box.center()[i];
    os.write(reinterpret_cast<const char*>(&c), sizeof c);
  }
  os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

inline ScalarField read_field_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kFieldMagic, 8) != 0) throw std::runtime_error("field dump: bad magic");
  std::int32_t d = 0, r = 0;
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&r), sizeof r);
  if (!is || d < 1 || d > kMaxDim || r < 1) throw std::runtime_error("field dump: bad header");
  Site c(d);
  for (int i = 0; i < d; ++i) {
    std::int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    c[i] = v;
  }
  ScalarField f(BoxRegion(d, r, c));
  is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!is) throw std::runtime_error("field dump: truncated data");
  return f;
}

}  // namespace lyap
