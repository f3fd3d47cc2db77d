#pragma once

// Lattice geometry on Z^d: sites, real directions, centered boxes with an
// absorbing outer layer, nearest neighbours and the signed coordinate
// permutations (the isometries of Z^d fixing the origin).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lyap {

/// Largest dimension supported by the fixed-size walk kernels.
inline constexpr int kMaxDim = 8;

class Site {
 public:
  Site() = default;
  explicit Site(int dim) : c_(static_cast<std::size_t>(dim), 0) {}
  Site(std::initializer_list<std::int64_t> c) : c_(c) {}
  explicit Site(std::vector<std::int64_t> c) : c_(std::move(c)) {}

  static Site origin(int dim) { return Site(dim); }
  static Site unit(int dim, int axis, std::int64_t sign = 1) {
    Site s(dim);
    s.c_.at(static_cast<std::size_t>(axis)) = sign;
    return s;
  }

  int dim() const { return static_cast<int>(c_.size()); }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  const std::vector<std::int64_t>& coords() const { return c_; }

  Site operator+(const Site& o) const { return zip(o, 1); }
  Site operator-(const Site& o) const { return zip(o, -1); }
  Site scaled(std::int64_t k) const {
    Site s = *this;
    for (auto& v : s.c_) v *= k;
    return s;
  }

  std::int64_t norm1() const {
    std::int64_t s = 0;
    for (auto v : c_) s += std::llabs(v);
    return s;
  }
  std::int64_t norm_inf() const {
    std::int64_t s = 0;
    for (auto v : c_) s = std::max<std::int64_t>(s, std::llabs(v));
    return s;
  }
  std::int64_t norm2_squared() const {
    std::int64_t s = 0;
    for (auto v : c_) s += v * v;
    return s;
  }
  double norm2() const { return std::sqrt(static_cast<double>(norm2_squared())); }
  bool is_origin() const {
    return std::all_of(c_.begin(), c_.end(), [](auto v) { return v == 0; });
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;

 private:
  Site zip(const Site& o, std::int64_t sign) const {
    if (o.dim() != dim()) throw std::invalid_argument("Site: dimension mismatch");
    Site s = *this;
    for (std::size_t i = 0; i < c_.size(); ++i) s.c_[i] += sign * o.c_[i];
    return s;
  }

  std::vector<std::int64_t> c_;
};

/// A real vector ell in R^d; most operations need ell != 0.
class Direction {
 public:
  Direction() = default;
  Direction(std::initializer_list<double> c) : c_(c) {}
  explicit Direction(std::vector<double> c) : c_(std::move(c)) {}
  explicit Direction(const Site& s) {
    c_.reserve(static_cast<std::size_t>(s.dim()));
    for (int i = 0; i < s.dim(); ++i) c_.push_back(static_cast<double>(s[i]));
  }
  static Direction unit(int dim, int axis) { return Direction(Site::unit(dim, axis)); }

  int dim() const { return static_cast<int>(c_.size()); }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& components() const { return c_; }

  double dot(const Direction& o) const {
    check_dim(o.dim());
    double s = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) s += c_[i] * o.c_[i];
    return s;
  }
  double dot(const Site& x) const {
    check_dim(x.dim());
    double s = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) s += c_[i] * static_cast<double>(x[static_cast<int>(i)]);
    return s;
  }
  double self_dot() const { return dot(*this); }
  double norm2() const { return std::sqrt(self_dot()); }
  double norm1() const {
    double s = 0.0;
    for (double v : c_) s += std::abs(v);
    return s;
  }
  double norm_inf() const {
    double s = 0.0;
    for (double v : c_) s = std::max(s, std::abs(v));
    return s;
  }
  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
  }
  Direction scaled(double k) const {
    Direction d = *this;
    for (auto& v : d.c_) v *= k;
    return d;
  }

  /// The lattice point k*ell, if every component of k*ell is an integer.
  bool lattice_multiple(std::int64_t k, Site* out) const {
    Site s(dim());
    for (int i = 0; i < dim(); ++i) {
      const double v = static_cast<double>(k) * c_[static_cast<std::size_t>(i)];
      if (v != std::floor(v)) return false;
      s[i] = static_cast<std::int64_t>(v);
    }
    if (out) *out = s;
    return true;
  }

  void require_nonzero(const char* who) const {
    if (c_.empty() || is_zero())
      throw std::invalid_argument(std::string(who) + ": direction must be non-zero");
  }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  void check_dim(int d) const {
    if (d != dim()) throw std::invalid_argument("Direction: dimension mismatch");
  }
  std::vector<double> c_;
};

/// The 2d nearest neighbours of x; axis by axis, -e_i before +e_i.
inline std::vector<Site> neighbors(const Site& x) {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(2 * x.dim()));
  for (int i = 0; i < x.dim(); ++i) {
    Site lo = x, hi = x;
    lo[i] -= 1;
    hi[i] += 1;
    out.push_back(std::move(lo));
    out.push_back(std::move(hi));
  }
  return out;
}

enum class BoundaryRule { absorbing };

/// Centered hypercube {x : |x_i - c_i| <= R}. Its outer layer |x_i - c_i| = R
/// is the absorbing boundary; the (2R-1)^d sites strictly inside are interior.
///
/// Sites are indexed row-major over coordinates offset by R, the last axis
/// varying fastest, so index(site(i)) == i for i in [0, size()).
class BoxRegion {
 public:
  BoxRegion() = default;
  BoxRegion(int dim, std::int64_t radius) : BoxRegion(dim, radius, Site::origin(dim)) {}
  BoxRegion(int dim, std::int64_t radius, Site center)
      : dim_(dim), radius_(radius), center_(std::move(center)) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("BoxRegion: unsupported dimension");
    if (radius < 1) throw std::invalid_argument("BoxRegion: radius must be >= 1");
    if (center_.dim() != dim) throw std::invalid_argument("BoxRegion: center dimension mismatch");
    side_ = 2 * radius + 1;
    strides_.assign(static_cast<std::size_t>(dim), 1);
    for (int i = dim - 2; i >= 0; --i)
      strides_[static_cast<std::size_t>(i)] = strides_[static_cast<std::size_t>(i) + 1] * side_;
    size_ = strides_[0] * side_;
  }

  int dim() const { return dim_; }
  std::int64_t radius() const { return radius_; }
  const Site& center() const { return center_; }
  BoundaryRule boundary_rule() const { return BoundaryRule::absorbing; }
  std::int64_t side() const { return side_; }
  std::size_t size() const { return static_cast<std::size_t>(size_); }
  const std::vector<std::int64_t>& strides() const { return strides_; }

  bool contains(const Site& x) const { return offset_inf(x) <= radius_; }
  bool is_interior(const Site& x) const { return offset_inf(x) < radius_; }
  bool is_boundary(const Site& x) const { return offset_inf(x) == radius_; }

  std::size_t index(const Site& x) const {
    if (!contains(x)) throw std::out_of_range("BoxRegion: site " + x.str() + " outside box");
    std::int64_t idx = 0;
    for (int i = 0; i < dim_; ++i) idx += (x[i] - center_[i] + radius_) * strides_[static_cast<std::size_t>(i)];
    return static_cast<std::size_t>(idx);
  }

  Site site(std::size_t index) const {
    Site s(dim_);
    auto rem = static_cast<std::int64_t>(index);
    for (int i = 0; i < dim_; ++i) {
      const auto st = strides_[static_cast<std::size_t>(i)];
      s[i] = rem / st - radius_ + center_[i];
      rem %= st;
    }
    return s;
  }

  bool index_is_interior(std::size_t index) const {
    auto rem = static_cast<std::int64_t>(index);
    for (int i = 0; i < dim_; ++i) {
      const auto st = strides_[static_cast<std::size_t>(i)];
      const auto c = rem / st;
      if (c == 0 || c == side_ - 1) return false;
      rem %= st;
    }
    return true;
  }

  /// Interior site indices in increasing (iteration) order.
  std::vector<std::size_t> interior_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (index_is_interior(i)) out.push_back(i);
    return out;
  }

  /// Flat-index offsets of the 2d neighbours, in neighbors() order.
  std::vector<std::int64_t> neighbor_offsets() const {
    std::vector<std::int64_t> out;
    for (auto st : strides_) {
      out.push_back(-st);
      out.push_back(st);
    }
    return out;
  }

  friend bool operator==(const BoxRegion& a, const BoxRegion& b) {
    return a.dim_ == b.dim_ && a.radius_ == b.radius_ && a.center_ == b.center_;
  }

 private:
  std::int64_t offset_inf(const Site& x) const {
    if (x.dim() != dim_) throw std::invalid_argument("BoxRegion: dimension mismatch");
    std::int64_t m = 0;
    for (int i = 0; i < dim_; ++i) m = std::max<std::int64_t>(m, std::llabs(x[i] - center_[i]));
    return m;
  }

  int dim_ = 1;
  std::int64_t radius_ = 1;
  Site center_ = Site::origin(1);
  std::int64_t side_ = 3;
  std::int64_t size_ = 3;
  std::vector<std::int64_t> strides_{1};
};

/// Signed coordinate permutation: (f x)_i = sign_i * x_{perm_i}.
class LatticeIsometry {
 public:
  LatticeIsometry() = default;
  LatticeIsometry(std::vector<int> perm, std::vector<int> signs)
      : perm_(std::move(perm)), signs_(std::move(signs)) {
    const auto d = perm_.size();
    if (signs_.size() != d || d == 0) throw std::invalid_argument("LatticeIsometry: size mismatch");
    std::vector<int> sorted = perm_;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < d; ++i)
      if (sorted[i] != static_cast<int>(i)) throw std::invalid_argument("LatticeIsometry: not a permutation");
    for (int s : signs_)
      if (s != 1 && s != -1) throw std::invalid_argument("LatticeIsometry: signs must be +-1");
  }

  static LatticeIsometry identity(int dim) {
    std::vector<int> p(static_cast<std::size_t>(dim));
    std::iota(p.begin(), p.end(), 0);
    return {p, std::vector<int>(static_cast<std::size_t>(dim), 1)};
  }
  static LatticeIsometry axis_swap(int dim, int a, int b) {
    auto f = identity(dim);
    std::swap(f.perm_.at(static_cast<std::size_t>(a)), f.perm_.at(static_cast<std::size_t>(b)));
    return f;
  }
  static LatticeIsometry reflection(int dim, int axis) {
    auto f = identity(dim);
    f.signs_.at(static_cast<std::size_t>(axis)) = -1;
    return f;
  }

  /// All 2^d d! elements of the hyperoctahedral group.
  static std::vector<LatticeIsometry> all(int dim) {
    std::vector<LatticeIsometry> out;
    std::vector<int> p(static_cast<std::size_t>(dim));
    std::iota(p.begin(), p.end(), 0);
    do {
      for (unsigned mask = 0; mask < (1u << dim); ++mask) {
        std::vector<int> s(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) s[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? -1 : 1;
        out.emplace_back(p, s);
      }
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }

  int dim() const { return static_cast<int>(perm_.size()); }

  Site apply(const Site& x) const {
    if (x.dim() != dim()) throw std::invalid_argument("apply_isometry: dimension mismatch");
    Site y(dim());
    for (int i = 0; i < dim(); ++i)
      y[i] = signs_[static_cast<std::size_t>(i)] * x[perm_[static_cast<std::size_t>(i)]];
    return y;
  }
  Direction apply(const Direction& x) const {
    if (x.dim() != dim()) throw std::invalid_argument("apply_isometry: dimension mismatch");
    std::vector<double> y(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i)
      y[static_cast<std::size_t>(i)] = signs_[static_cast<std::size_t>(i)] * x[perm_[static_cast<std::size_t>(i)]];
    return Direction(std::move(y));
  }

  /// (this * g)(x) = this(g(x)).
  LatticeIsometry compose(const LatticeIsometry& g) const {
    if (g.dim() != dim()) throw std::invalid_argument("LatticeIsometry: dimension mismatch");
    std::vector<int> p(perm_.size()), s(perm_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) {
      const auto j = static_cast<std::size_t>(perm_[i]);
      p[i] = g.perm_[j];
      s[i] = signs_[i] * g.signs_[j];
    }
    return {p, s};
  }

  LatticeIsometry inverse() const {
    std::vector<int> p(perm_.size()), s(perm_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) {
      const auto j = static_cast<std::size_t>(perm_[i]);
      p[j] = static_cast<int>(i);
      s[j] = signs_[i];
    }
    return {p, s};
  }

  friend bool operator==(const LatticeIsometry&, const LatticeIsometry&) = default;

 private:
  std::vector<int> perm_{0};
  std::vector<int> signs_{1};
};

inline Site apply_isometry(const LatticeIsometry& f, const Site& x) { return f.apply(x); }

}  // namespace lyap
