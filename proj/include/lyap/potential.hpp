#pragma once

// I.i.d. potential families: marginal laws, scaling transforms, exact moments,
// the log-Laplace transform Lambda(lambda) = -ln E[exp(-lambda X)], sampling
// onto boxes, and the curated "more variable" pairs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "lyap/lattice.hpp"
#include "lyap/rng.hpp"

namespace lyap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family { constant, bernoulli, exponential, two_point };
enum class Scaling { raw, gamma_scaled, log1p_gamma, example3, example4 };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::bernoulli: return "bernoulli";
    case Family::exponential: return "exponential";
    case Family::two_point: return "two_point";
  }
  return "?";
}

inline std::string to_string(Scaling s) {
  switch (s) {
    case Scaling::raw: return "raw";
    case Scaling::gamma_scaled: return "gamma_scaled";
    case Scaling::log1p_gamma: return "log1p_gamma";
    case Scaling::example3: return "example3";
    case Scaling::example4: return "example4";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  for (auto f : {Family::constant, Family::bernoulli, Family::exponential, Family::two_point})
    if (to_string(f) == s) return f;
  throw std::invalid_argument("unknown potential family '" + s + "'");
}

inline Scaling scaling_from_string(const std::string& s) {
  for (auto v : {Scaling::raw, Scaling::gamma_scaled, Scaling::log1p_gamma, Scaling::example3, Scaling::example4})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown potential scaling '" + s + "'");
}

/// Marginal law of V(0) followed by an optional scaling.
///
/// Families (values may be +inf, meaning a site that kills surely):
///   constant(c)            V = c
///   bernoulli(p, a, b)     V = b with probability p, else a
///   exponential(rate)      V ~ Exp(rate)
///   two_point(p, v0, v1)   V = v1 with probability p, else v0
/// Scalings map V to V_gamma:
///   raw            V
///   gamma_scaled   gamma * V
///   log1p_gamma    ln(gamma * V + 1)
///   example3       0 w.p. 1-gamma, 1 w.p. gamma        (family ignored)
///   example4       gamma w.p. 1-gamma^(1/3), 1/gamma w.p. gamma^(1/3)  (family ignored)
struct PotentialSpec {
  Family family = Family::constant;
  std::vector<double> params{1.0};
  Scaling scaling = Scaling::raw;
  double gamma = 1.0;

  static PotentialSpec constant(double c) { return {Family::constant, {c}, Scaling::raw, 1.0}; }
  static PotentialSpec bernoulli(double p, double a, double b) { return {Family::bernoulli, {p, a, b}, Scaling::raw, 1.0}; }
  static PotentialSpec exponential(double rate) { return {Family::exponential, {rate}, Scaling::raw, 1.0}; }
  static PotentialSpec two_point(double p, double v0, double v1) { return {Family::two_point, {p, v0, v1}, Scaling::raw, 1.0}; }
  static PotentialSpec example3(double g) { return constant(1.0).scaled(Scaling::example3, g); }
  static PotentialSpec example4(double g) { return constant(1.0).scaled(Scaling::example4, g); }

  PotentialSpec scaled(Scaling s, double g) const {
    PotentialSpec out = *this;
    out.scaling = s;
    out.gamma = g;
    return out;
  }
  PotentialSpec with_gamma(double g) const { return scaled(scaling, g); }

  bool uses_gamma() const { return scaling != Scaling::raw; }

  /// Parameter checks only; validate() also requires P[V(0) > 0] > 0.
  void validate_law() const {
    auto need = [&](std::size_t n) {
      if (params.size() != n)
        throw std::invalid_argument(to_string(family) + " expects " + std::to_string(n) + " parameters");
    };
    auto nonneg = [](double v, const char* what) {
      if (!(v >= 0.0)) throw std::invalid_argument(std::string("potential value ") + what + " must be >= 0");
    };
    auto prob = [](double p) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must lie in [0,1]");
    };
    switch (family) {
      case Family::constant:
        need(1);
        nonneg(params[0], "c");
        break;
      case Family::bernoulli:
      case Family::two_point:
        need(3);
        prob(params[0]);
        nonneg(params[1], "a/v0");
        nonneg(params[2], "a/v1");
        break;
      case Family::exponential:
        need(1);
        if (!(params[0] > 0.0 && std::isfinite(params[0])))
          throw std::invalid_argument("exponential rate must be positive and finite");
        break;
    }
    if (uses_gamma() && !(gamma > 0.0 && std::isfinite(gamma)))
      throw std::invalid_argument("gamma must be positive for scaling " + to_string(scaling));
    if ((scaling == Scaling::example3 || scaling == Scaling::example4) && !(gamma < 1.0))
      throw std::invalid_argument("example scalings need gamma < 1");
  }

  void validate() const {
    validate_law();
    if (!positive_mass()) throw std::invalid_argument("potential must satisfy P[V(0) > 0] > 0");
  }

  std::string describe() const {
    std::string s = to_string(family) + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(params[i]);
    }
    s += ")";
    if (uses_gamma()) s += "/" + to_string(scaling) + "(" + std::to_string(gamma) + ")";
    return s;
  }

  friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;

 private:
  bool positive_mass() const;
};

namespace detail {

struct Atom {
  double value;
  double prob;
};

/// Discrete marginal after scaling, or an empty list for the exponential family.
inline std::vector<Atom> atoms(const PotentialSpec& s) {
  if (s.scaling == Scaling::example3) return {{0.0, 1.0 - s.gamma}, {1.0, s.gamma}};
  if (s.scaling == Scaling::example4) {
    const double q = std::cbrt(s.gamma);
    return {{s.gamma, 1.0 - q}, {1.0 / s.gamma, q}};
  }
  std::vector<Atom> raw;
  switch (s.family) {
    case Family::constant: raw = {{s.params[0], 1.0}}; break;
    case Family::bernoulli:
    case Family::two_point: raw = {{s.params[1], 1.0 - s.params[0]}, {s.params[2], s.params[0]}}; break;
    case Family::exponential: return {};
  }
  for (auto& a : raw) {
    if (s.scaling == Scaling::gamma_scaled) a.value = s.gamma * a.value;
    if (s.scaling == Scaling::log1p_gamma) a.value = std::log1p(s.gamma * a.value);
  }
  std::vector<Atom> out;
  for (const auto& a : raw)
    if (a.prob > 0.0) out.push_back(a);
  return out;
}

/// lambda * v with the conventions 0 * inf = inf * 0 = 0.
inline double atom_laplace_exponent(double lambda, double v) {
  if (lambda == 0.0 || v == 0.0) return 0.0;
  return lambda * v;
}

inline bool is_continuous(const PotentialSpec& s) {
  return s.family == Family::exponential && s.scaling != Scaling::example3 && s.scaling != Scaling::example4;
}

/// Scale factor of V_gamma = scale * X for X ~ Exp(rate); only raw/gamma_scaled.
inline double exponential_scale(const PotentialSpec& s) { return s.scaling == Scaling::gamma_scaled ? s.gamma : 1.0; }

inline double quad_log1p_exponential(double rate, double gamma, double lambda, bool mean) {
  // X ~ Exp(rate), t = rate * X ~ Exp(1).
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double t) {
    const double y = std::log1p(gamma * t / rate);
    return std::exp(-t) * (mean ? y : std::exp(-lambda * y));
  };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace detail

inline bool PotentialSpec::positive_mass() const {
  if (detail::is_continuous(*this)) return true;
  for (const auto& a : detail::atoms(*this))
    if (a.value > 0.0 && a.prob > 0.0) return true;
  return false;
}

/// Dense site values on a box, indexed by BoxRegion::index.
struct ScalarField {
  BoxRegion box;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(BoxRegion b, double fill = 0.0) : box(std::move(b)), values(box.size(), fill) {}

  double at(const Site& x) const { return values[box.index(x)]; }
  double& at(const Site& x) { return values[box.index(x)]; }
  std::size_t size() const { return values.size(); }
};

/// E[V_gamma(0)]; +inf is a legitimate answer.
inline double mean(const PotentialSpec& spec) {
  spec.validate_law();
  if (spec.family == Family::exponential && (spec.scaling == Scaling::raw || spec.scaling == Scaling::gamma_scaled))
    return detail::exponential_scale(spec) / spec.params[0];
  if (spec.family == Family::exponential && spec.scaling == Scaling::log1p_gamma)
    return detail::quad_log1p_exponential(spec.params[0], spec.gamma, 0.0, true);
  double m = 0.0;
  for (const auto& a : detail::atoms(spec)) {
    if (std::isinf(a.value)) return kInf;
    m += a.prob * a.value;
  }
  return m;
}

/// Whether log_mgf is an exact finite expression (no quadrature).
inline bool has_closed_form_log_mgf(const PotentialSpec& spec) {
  return !(detail::is_continuous(spec) && spec.scaling == Scaling::log1p_gamma);
}

/// Lambda(lambda) = -ln E[exp(-lambda V_gamma(0))] for lambda >= 0.
inline double log_mgf(const PotentialSpec& spec, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("log_mgf: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  if (detail::is_continuous(spec)) {
    if (spec.scaling == Scaling::log1p_gamma)
      return -std::log(detail::quad_log1p_exponential(spec.params[0], spec.gamma, lambda, false));
    if (std::isinf(lambda)) return kInf;
    return std::log1p(lambda * detail::exponential_scale(spec) / spec.params[0]);
  }
  // Stable log-sum-exp over the atoms.
  const auto at = detail::atoms(spec);
  double lo = kInf;
  for (const auto& a : at) lo = std::min(lo, detail::atom_laplace_exponent(lambda, a.value));
  if (std::isinf(lo)) return kInf;
  double sum = 0.0;
  for (const auto& a : at) {
    const double e = detail::atom_laplace_exponent(lambda, a.value);
    if (!std::isinf(e)) sum += a.prob * std::exp(-(e - lo));
  }
  return lo - std::log(sum);
}

/// Inverse-CDF draw of V_gamma from a uniform u in [0,1).
inline double draw_value(const PotentialSpec& spec, double u) {
  if (detail::is_continuous(spec)) {
    const double x = -std::log1p(-u) / spec.params[0];
    if (spec.scaling == Scaling::log1p_gamma) return std::log1p(spec.gamma * x);
    return detail::exponential_scale(spec) * x;
  }
  const auto at = detail::atoms(spec);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < at.size(); ++i) {
    acc += at[i].prob;
    if (u < acc) return at[i].value;
  }
  return at.back().value;
}

/// I.i.d. field on every site of the box (boundary layer included). The value
/// at x depends only on (spec, seed, x).
inline ScalarField sample_field(const PotentialSpec& spec, const BoxRegion& box, std::uint64_t seed) {
  spec.validate();
  ScalarField f(box);
  for (std::size_t i = 0; i < box.size(); ++i) f.values[i] = draw_value(spec, site_uniform(seed, box.site(i)));
  return f;
}

/// Law of lim V_gamma(0)/gamma as gamma -> 0, used for scaling-law targets.
inline PotentialSpec limit_spec(const PotentialSpec& spec) {
  switch (spec.scaling) {
    case Scaling::raw:
    case Scaling::gamma_scaled:
    case Scaling::log1p_gamma: return spec.scaled(Scaling::raw, 1.0);
    case Scaling::example3: return PotentialSpec::constant(0.0);
    case Scaling::example4: return PotentialSpec::constant(1.0);
  }
  return spec;
}

/// Spec of ln(V_gamma + 1), the potential whose random-walk Green's function
/// equals the operator Green's function of V_gamma.
inline PotentialSpec operator_transform(const PotentialSpec& spec) {
  spec.validate();
  if (detail::is_continuous(spec)) {
    if (spec.scaling == Scaling::raw) return spec.scaled(Scaling::log1p_gamma, 1.0);
    if (spec.scaling == Scaling::gamma_scaled) return spec.scaled(Scaling::log1p_gamma, spec.gamma);
    throw std::invalid_argument("operator_transform: unsupported for " + spec.describe());
  }
  const auto at = detail::atoms(spec);
  if (at.size() == 1) return PotentialSpec::constant(std::log1p(at[0].value));
  return PotentialSpec::two_point(at[1].prob, std::log1p(at[0].value), std::log1p(at[1].value));
}

struct MoreVariablePair {
  std::string name;
  PotentialSpec more_variable;
  PotentialSpec less_variable;
};

/// Curated pairs (V, W) with E[V] = E[W] and V more variable than W, i.e.
/// E h(V) <= E h(W) for every increasing concave h.
inline std::vector<MoreVariablePair> more_variable_pairs() {
  return {
      {"exponential(2)>constant(0.5)", PotentialSpec::exponential(2.0), PotentialSpec::constant(0.5)},
      {"bernoulli(0.5,0,1)>constant(0.5)", PotentialSpec::bernoulli(0.5, 0.0, 1.0), PotentialSpec::constant(0.5)},
      {"bernoulli(0.25,0,2)>bernoulli(0.5,0,1)", PotentialSpec::bernoulli(0.25, 0.0, 2.0),
       PotentialSpec::bernoulli(0.5, 0.0, 1.0)},
  };
}

}  // namespace lyap
