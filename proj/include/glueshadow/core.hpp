#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glueshadow/errors.hpp"

namespace glueshadow {

enum class Space { interval, plane, torus };

inline const char* to_string(Space s) {
  switch (s) {
    case Space::interval: return "interval_01";
    case Space::plane: return "plane_r2";
    case Space::torus: return "torus_t2";
  }
  return "?";
}

inline constexpr int dimension(Space s) { return s == Space::interval ? 1 : 2; }

/// Interval points may overshoot [0,1] by this much from rounding; they are
/// snapped back instead of rejected.
inline constexpr double kIntervalSnap = 1e-12;

using Vec2 = std::array<double, 2>;

/// A point of one of the three phase spaces. Interval states live in [0,1],
/// torus states in [0,1)^2; the factories enforce this.
class State {
 public:
  State() = default;

  static State interval(double v) {
    if (!(v >= -kIntervalSnap && v <= 1.0 + kIntervalSnap)) {
      throw domain_error("interval state out of [0,1]: " + std::to_string(v));
    }
    return State(Space::interval, {std::clamp(v, 0.0, 1.0), 0.0});
  }
  static State plane(double a, double b) { return State(Space::plane, {a, b}); }
  static State torus(double a, double b) { return State(Space::torus, {wrap(a), wrap(b)}); }

  static State in(Space s, const Vec2& c) {
    switch (s) {
      case Space::interval: return interval(c[0]);
      case Space::plane: return plane(c[0], c[1]);
      case Space::torus: return torus(c[0], c[1]);
    }
    return {};
  }

  Space space() const noexcept { return space_; }
  int dim() const noexcept { return dimension(space_); }
  double operator[](int i) const noexcept { return coords_[static_cast<std::size_t>(i)]; }
  const Vec2& coords() const noexcept { return coords_; }
  double value() const noexcept { return coords_[0]; }

  friend bool operator==(const State&, const State&) = default;

  /// Reduces a real number to [0,1).
  static double wrap(double v) {
    double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
  }

 private:
  State(Space s, Vec2 c) : space_(s), coords_(c) {}

  Space space_ = Space::interval;
  Vec2 coords_{0.0, 0.0};
};

inline double distance(const State& u, const State& v) {
  if (u.space() != v.space()) {
    throw usage_error(std::string("distance between ") + to_string(u.space()) + " and " +
                      to_string(v.space()));
  }
  switch (u.space()) {
    case Space::interval: return std::abs(u[0] - v[0]);
    case Space::plane: return std::hypot(u[0] - v[0], u[1] - v[1]);
    case Space::torus: {
      // flat metric: nearest of the integer translates, coordinate-wise
      double dx = std::abs(u[0] - v[0]);
      double dy = std::abs(u[1] - v[1]);
      dx = std::min(dx, 1.0 - dx);
      dy = std::min(dy, 1.0 - dy);
      return std::hypot(dx, dy);
    }
  }
  return 0.0;
}

// --- small 2x2 linear algebra -------------------------------------------------

struct Mat2 {
  double a = 1, b = 0, c = 0, d = 1;  // [[a b] [c d]]

  static Mat2 columns(const Vec2& e1, const Vec2& e2) { return {e1[0], e2[0], e1[1], e2[1]}; }

  double det() const { return a * d - b * c; }
  Mat2 inverse() const {
    double dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
  }
  Vec2 operator*(const Vec2& v) const { return {a * v[0] + b * v[1], c * v[0] + d * v[1]}; }
  Mat2 operator*(const Mat2& m) const {
    return {a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d};
  }
  /// Spectral (operator 2-) norm.
  double norm2() const {
    double s = a * a + b * b + c * c + d * d;
    double dt = det();
    double disc = std::sqrt(std::max(0.0, s * s - 4.0 * dt * dt));
    return std::sqrt((s + disc) / 2.0);
  }
};

inline Vec2 operator+(const Vec2& u, const Vec2& v) { return {u[0] + v[0], u[1] + v[1]}; }
inline Vec2 operator-(const Vec2& u, const Vec2& v) { return {u[0] - v[0], u[1] - v[1]}; }
inline Vec2 operator*(double s, const Vec2& v) { return {s * v[0], s * v[1]}; }
inline double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

/// Coordinates (p, q) with v = p*e1 + q*e2.
inline std::pair<double, double> basis_coordinates(const Vec2& e1, const Vec2& e2, const Vec2& v) {
  Mat2 m = Mat2::columns(e1, e2);
  if (std::abs(m.det()) < 1e-14) throw usage_error("basis vectors are collinear");
  Vec2 r = m.inverse() * v;
  return {r[0], r[1]};
}

// --- trajectory windows -------------------------------------------------------

/// Finite window of a (bi-infinite) orbit. Index i runs over
/// [-neg_len, pos_len-1]; index 0 is the origin.
class TrajectoryWindow {
 public:
  TrajectoryWindow() = default;

  TrajectoryWindow(std::vector<State> points, std::size_t neg_len)
      : points_(std::move(points)), neg_len_(static_cast<long>(neg_len)) {
    if (neg_len_ > static_cast<long>(points_.size())) {
      throw usage_error("neg_len exceeds window length");
    }
    for (const auto& p : points_) {
      if (p.space() != points_.front().space()) {
        throw usage_error("trajectory window mixes phase spaces");
      }
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  long neg_len() const noexcept { return neg_len_; }
  long pos_len() const noexcept { return static_cast<long>(points_.size()) - neg_len_; }
  long first_index() const noexcept { return -neg_len_; }
  long last_index() const noexcept { return pos_len() - 1; }
  bool contains(long i) const noexcept { return i >= first_index() && i <= last_index(); }
  Space space() const {
    if (points_.empty()) throw usage_error("empty window has no space");
    return points_.front().space();
  }

  const State& at(long i) const {
    if (!contains(i)) throw usage_error("window index " + std::to_string(i) + " out of range");
    return points_[static_cast<std::size_t>(i + neg_len_)];
  }
  const State& operator[](long i) const { return points_[static_cast<std::size_t>(i + neg_len_)]; }

  const std::vector<State>& points() const noexcept { return points_; }

  friend bool operator==(const TrajectoryWindow&, const TrajectoryWindow&) = default;

 private:
  std::vector<State> points_;
  long neg_len_ = 0;
};

/// Re-origins the window at former index tau. Points are unchanged.
inline TrajectoryWindow shift(const TrajectoryWindow& w, long tau) {
  if (!w.contains(tau)) throw usage_error("shift " + std::to_string(tau) + " outside window");
  return TrajectoryWindow(w.points(), static_cast<std::size_t>(w.neg_len() + tau));
}

/// Part of the window with indices <= 0.
inline TrajectoryWindow backward_part(const TrajectoryWindow& w) {
  if (!w.contains(0)) throw usage_error("window has no origin");
  std::vector<State> pts(w.points().begin(), w.points().begin() + w.neg_len() + 1);
  return TrajectoryWindow(std::move(pts), static_cast<std::size_t>(w.neg_len()));
}

/// Part of the window with indices >= 0.
inline TrajectoryWindow forward_part(const TrajectoryWindow& w) {
  if (!w.contains(0)) throw usage_error("window has no origin");
  std::vector<State> pts(w.points().begin() + w.neg_len(), w.points().end());
  return TrajectoryWindow(std::move(pts), 0);
}

// --- map interface ------------------------------------------------------------

/// A piecewise bijective map: each branch is injective and carries its own
/// inverse, defined on the branch image.
template <class M>
concept PiecewiseBijective = requires(const M& m, const State& s, int branch) {
  { m.space() } -> std::same_as<Space>;
  { m.branch_count() } -> std::convertible_to<int>;
  { m.forward(s) } -> std::same_as<State>;
  { m.branch_index(s) } -> std::convertible_to<int>;
  { m.covers(branch, s) } -> std::same_as<bool>;
  { m.preimage(branch, s) } -> std::same_as<State>;
};

/// T_v^{-1}: the inverse of the branch containing v, applied to y.
template <PiecewiseBijective M>
State inverse_branch(const M& map, const State& v, const State& y) {
  return map.preimage(map.branch_index(v), y);
}

/// Max over the window of rho(T w_i, w_{i+1}).
template <PiecewiseBijective M>
double verify_trajectory(const M& map, const TrajectoryWindow& w) {
  if (w.size() < 2) throw usage_error("trajectory check needs at least two points");
  double worst = 0.0;
  for (long i = w.first_index(); i < w.last_index(); ++i) {
    worst = std::max(worst, distance(map.forward(w[i]), w[i + 1]));
  }
  return worst;
}

template <PiecewiseBijective M>
TrajectoryWindow forward_orbit(const M& map, const State& x0, std::size_t length) {
  if (length == 0) throw usage_error("orbit length must be positive");
  std::vector<State> pts;
  pts.reserve(length);
  pts.push_back(x0);
  for (std::size_t i = 1; i < length; ++i) pts.push_back(map.forward(pts.back()));
  return TrajectoryWindow(std::move(pts), 0);
}

/// Backward semi-trajectory ending at x0 (index 0). branch_path[j] is the
/// branch of x_{-(j+1)}; the path is cycled if shorter than steps.
template <PiecewiseBijective M>
TrajectoryWindow backward_orbit(const M& map, const State& x0, std::size_t steps,
                                std::span<const int> branch_path) {
  if (steps > 0 && branch_path.empty()) throw usage_error("empty branch path");
  std::vector<State> rev;
  rev.reserve(steps + 1);
  rev.push_back(x0);
  for (std::size_t j = 0; j < steps; ++j) {
    int b = branch_path[j % branch_path.size()];
    if (b < 0 || b >= map.branch_count()) throw usage_error("branch path entry out of range");
    rev.push_back(map.preimage(b, rev.back()));
  }
  std::reverse(rev.begin(), rev.end());
  return TrajectoryWindow(std::move(rev), steps);
}

// --- numerics -----------------------------------------------------------------

/// Solves f(x) = target for increasing f on [lo, hi] by Newton steps kept
/// inside a shrinking bracket, bisecting whenever the derivative is below 0.5
/// or Newton would leave the bracket. Iterates to full double precision and
/// certifies |f(x) - target| <= tol.
template <class F, class DF>
double solve_increasing(F f, DF df, double target, double lo, double hi, double guess,
                        double tol = 1e-13) {
  double flo = f(lo) - target;
  double fhi = f(hi) - target;
  if (flo > 0.0 || fhi < 0.0) {
    if (flo > 0.0 && flo <= tol) return lo;
    if (fhi < 0.0 && -fhi <= tol) return hi;
    throw domain_error("target " + std::to_string(target) + " not bracketed");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  double x = std::clamp(guess, lo, hi);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < 4000; ++it) {
    double fx = f(x) - target;
    if (fx == 0.0) return x;
    (fx < 0.0 ? lo : hi) = x;
    double d = df(x);
    double next = x - fx / d;
    if (!(d > 0.5) || !(next > lo && next < hi)) next = lo + (hi - lo) / 2.0;
    double step = std::abs(next - x);
    x = next;
    if (step <= 2.0 * eps * std::abs(x) || hi - lo <= 2.0 * eps * std::abs(x) ||
        hi - lo < std::numeric_limits<double>::denorm_min() * 4) {
      break;
    }
  }
  double resid = std::abs(f(x) - target);
  if (resid > tol) {
    throw numerical_failure("root finding residual " + std::to_string(resid) + " exceeds tolerance");
  }
  return x;
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rss = 0.0;  ///< residual sum of squares
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw usage_error("linear fit needs >= 2 points");
  double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - f.intercept - f.slope * xs[i];
    f.rss += r * r;
  }
  return f;
}

}  // namespace glueshadow
