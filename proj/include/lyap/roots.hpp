#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

namespace lyap {

struct RootSolveResult {
  double s = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Root of a strictly increasing f on [lo, hi] with f(lo) <= 0 <= f(hi):
/// bisection until hi - lo <= rel_width * hi, then one Newton step (kept only
/// if it stays inside the final bracket and does not increase |f|).
inline RootSolveResult bisect_then_newton(const std::function<double(double)>& f,
                                          const std::function<double(double)>& df, double lo, double hi,
                                          double rel_width = 1e-14, int max_iter = 400) {
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) throw std::invalid_argument("bisect_then_newton: root not bracketed");
  int it = 0;
  while (hi - lo > rel_width * std::abs(hi) && it < max_iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    ++it;
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    (fm < 0.0 ? lo : hi) = mid;
  }
  double s = 0.5 * (lo + hi);
  double fs = f(s);
  const double d = df(s);
  if (d > 0.0 && std::isfinite(d)) {
    const double t = s - fs / d;
    if (t >= lo && t <= hi) {
      const double ft = f(t);
      if (std::abs(ft) <= std::abs(fs)) {
        s = t;
        fs = ft;
      }
    }
  }
  return {s, std::abs(fs), it + 1};
}

}  // namespace lyap
