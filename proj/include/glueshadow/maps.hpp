#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include "glueshadow/core.hpp"

namespace glueshadow {

/// T x = a x on [0,c), b x + 1 - b on [c,1].
class PiecewiseLinearMap {
 public:
  PiecewiseLinearMap(double a, double b, double c) : a_(a), b_(b), c_(c) {
    if (!(a > 0) || !(b > 0)) throw usage_error("piecewise linear map needs a, b > 0");
    if (!(c > 0 && c < 1)) throw usage_error("piecewise linear map needs 0 < c < 1");
    if (a * c > 1.0 + 1e-12 || b * (1.0 - c) > 1.0 + 1e-12) {
      throw usage_error("piecewise linear map does not send [0,1] into itself");
    }
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  bool full_branch() const {
    return std::abs(a_ * c_ - 1.0) <= 1e-12 && std::abs(b_ * (1.0 - c_) - 1.0) <= 1e-12;
  }

  Space space() const { return Space::interval; }
  int branch_count() const { return 2; }
  int branch_index(const State& x) const { return x[0] < c_ ? 0 : 1; }

  State forward(const State& x) const {
    double v = x[0];
    return State::interval(v < c_ ? a_ * v : b_ * v + 1.0 - b_);
  }

  std::pair<double, double> branch_image(int branch) const {
    return branch == 0 ? std::pair{0.0, a_ * c_} : std::pair{1.0 - b_ * (1.0 - c_), 1.0};
  }

  /// The left image [0, ac) is half-open: a preimage rounding to c would
  /// sit on the right branch.
  bool covers(int branch, const State& y) const {
    auto [lo, hi] = branch_image(branch);
    if (branch == 0) return y[0] >= lo - 1e-12 && y[0] / a_ < c_;
    return y[0] >= lo - 1e-12 && y[0] <= hi + 1e-12;
  }

  State preimage(int branch, const State& y) const {
    if (!covers(branch, y)) {
      throw domain_error("branch " + std::to_string(branch) + " image does not contain y = " +
                         std::to_string(y[0]));
    }
    if (branch == 0) return State::interval(std::max(y[0] / a_, 0.0));
    return State::interval(std::clamp((y[0] - 1.0 + b_) / b_, c_, 1.0));
  }

 private:
  double a_, b_, c_;
};

/// Interval map with neutral fixed points at 0 and 1:
///   T x = x + (1-c)(x/c)^{1+alpha}      for x <= c
///   T x = 1 - T(c(1-x)/(1-c))           for x > c
/// The right branch starts from 0 just above c, so T jumps at c.
class NeutralMap {
 public:
  NeutralMap(double alpha, double c, double root_tol = 1e-13) : alpha_(alpha), c_(c), tol_(root_tol) {
    if (!(alpha > 0)) throw usage_error("neutral map needs alpha > 0");
    if (!(c > 0 && c < 1)) throw usage_error("neutral map needs 0 < c < 1");
  }

  double alpha() const { return alpha_; }
  double c() const { return c_; }

  Space space() const { return Space::interval; }
  int branch_count() const { return 2; }
  int branch_index(const State& x) const { return x[0] <= c_ ? 0 : 1; }

  double left(double x) const { return x + (1.0 - c_) * std::pow(x / c_, 1.0 + alpha_); }
  double left_derivative(double x) const {
    return 1.0 + (1.0 - c_) * (1.0 + alpha_) / c_ * std::pow(x / c_, alpha_);
  }
  double right(double x) const { return 1.0 - left(c_ * (1.0 - x) / (1.0 - c_)); }

  /// Inverse of the left branch on [0,1].
  double left_inverse(double y) const {
    y = std::clamp(y, 0.0, 1.0);
    if (y == 0.0) return 0.0;
    return solve_increasing([this](double x) { return left(x); },
                            [this](double x) { return left_derivative(x); }, y, 0.0, c_,
                            std::min(y, c_), tol_);
  }

  State forward(const State& x) const {
    double v = x[0];
    return State::interval(v <= c_ ? left(v) : right(v));
  }

  bool covers(int, const State& y) const { return y[0] >= -1e-12 && y[0] <= 1.0 + 1e-12; }

  State preimage(int branch, const State& y) const {
    if (!covers(branch, y)) throw domain_error("neutral map preimage of point outside [0,1]");
    if (branch == 0) return State::interval(left_inverse(y[0]));
    double s = left_inverse(1.0 - y[0]);
    return State::interval(std::clamp(1.0 - s * (1.0 - c_) / c_, c_, 1.0));
  }

 private:
  double alpha_, c_, tol_;
};

/// Eigen data shared by the two hyperbolic linear maps.
struct EigenBasis {
  double lambda1 = 2.0;  ///< unstable, > 1
  double lambda2 = 0.5;  ///< stable, in (0,1)
  Vec2 e1{1, 0};
  Vec2 e2{0, 1};
  Mat2 basis;      ///< columns e1, e2
  Mat2 basis_inv;

  /// ||E|| * ||E^{-1}||: bounds eigen-coordinate differences by distances.
  double condition() const { return basis.norm2() * basis_inv.norm2(); }
};

inline EigenBasis make_eigen_basis(double l1, double l2, Vec2 e1, Vec2 e2) {
  if (!(l1 > 1.0 && l2 > 0.0 && l2 < 1.0)) {
    throw usage_error("hyperbolic map needs lambda1 > 1 > lambda2 > 0");
  }
  double n1 = norm(e1), n2 = norm(e2);
  if (n1 == 0.0 || n2 == 0.0) throw usage_error("zero eigenvector");
  e1 = (1.0 / n1) * e1;
  e2 = (1.0 / n2) * e2;
  Mat2 E = Mat2::columns(e1, e2);
  if (std::abs(E.det()) < 1e-12) throw usage_error("eigenvectors are collinear");
  return {l1, l2, e1, e2, E, E.inverse()};
}

/// T x = A x + a on the plane, A = E diag(lambda1, lambda2) E^{-1}.
class HyperbolicAffine2D {
 public:
  HyperbolicAffine2D(double lambda1, double lambda2, Vec2 e1, Vec2 e2, Vec2 offset = {0, 0})
      : eig_(make_eigen_basis(lambda1, lambda2, e1, e2)), offset_(offset) {
    Mat2 D{eig_.lambda1, 0, 0, eig_.lambda2};
    A_ = eig_.basis * D * eig_.basis_inv;
    Ainv_ = A_.inverse();
    Mat2 IminusA{1 - A_.a, -A_.b, -A_.c, 1 - A_.d};
    fixed_ = IminusA.inverse() * offset_;
  }

  const EigenBasis& eigen() const { return eig_; }
  const Mat2& matrix() const { return A_; }
  const Vec2& offset() const { return offset_; }
  const Vec2& fixed_point() const { return fixed_; }
  double condition_constant() const { return eig_.condition(); }

  Space space() const { return Space::plane; }
  int branch_count() const { return 1; }
  int branch_index(const State&) const { return 0; }
  bool covers(int, const State&) const { return true; }

  State forward(const State& x) const {
    Vec2 r = A_ * x.coords() + offset_;
    return State::plane(r[0], r[1]);
  }
  State preimage(int, const State& y) const {
    Vec2 r = Ainv_ * (y.coords() - offset_);
    return State::plane(r[0], r[1]);
  }

  /// Eigen coordinates of v relative to the fixed point.
  std::pair<double, double> eigen_coordinates(const Vec2& v) const {
    Vec2 r = eig_.basis_inv * (v - fixed_);
    return {r[0], r[1]};
  }

 private:
  EigenBasis eig_;
  Vec2 offset_;
  Mat2 A_, Ainv_;
  Vec2 fixed_{0, 0};
};

/// T x = A x mod 1 on the torus, A integer with det 1 and trace > 2.
class TorusLinearMap {
 public:
  explicit TorusLinearMap(std::array<long, 4> m) : m_(m) {
    long det = m[0] * m[3] - m[1] * m[2];
    if (det != 1 && det != -1) throw usage_error("torus matrix must have |det| = 1");
    double tr = static_cast<double>(m[0] + m[3]);
    double disc = tr * tr - 4.0 * static_cast<double>(det);
    if (det != 1 || disc <= 0 || tr <= 2.0) {
      throw usage_error("torus matrix is not hyperbolic with positive eigenvalues");
    }
    double l1 = (tr + std::sqrt(disc)) / 2.0;
    double l2 = static_cast<double>(det) / l1;
    eig_ = make_eigen_basis(l1, l2, eigenvector(l1), eigenvector(l2));
  }

  const std::array<long, 4>& matrix() const { return m_; }
  const EigenBasis& eigen() const { return eig_; }
  double condition_constant() const { return eig_.condition(); }

  Space space() const { return Space::torus; }
  int branch_count() const { return 1; }
  int branch_index(const State&) const { return 0; }
  bool covers(int, const State&) const { return true; }

  State forward(const State& x) const {
    double u = static_cast<double>(m_[0]) * x[0] + static_cast<double>(m_[1]) * x[1];
    double v = static_cast<double>(m_[2]) * x[0] + static_cast<double>(m_[3]) * x[1];
    return State::torus(u, v);
  }
  State preimage(int, const State& y) const {
    // det = 1: inverse is [[d, -b], [-c, a]]
    double u = static_cast<double>(m_[3]) * y[0] - static_cast<double>(m_[1]) * y[1];
    double v = -static_cast<double>(m_[2]) * y[0] + static_cast<double>(m_[0]) * y[1];
    return State::torus(u, v);
  }

  std::pair<double, double> eigen_coordinates(const Vec2& v) const {
    Vec2 r = eig_.basis_inv * v;
    return {r[0], r[1]};
  }

 private:
  Vec2 eigenvector(double l) const {
    double a = static_cast<double>(m_[0]), b = static_cast<double>(m_[1]);
    double c = static_cast<double>(m_[2]), d = static_cast<double>(m_[3]);
    if (b != 0.0) return {b, l - a};
    return {l - d, c};
  }

  std::array<long, 4> m_;
  EigenBasis eig_;
};

template <class M>
concept HyperbolicLinear = std::same_as<M, HyperbolicAffine2D> || std::same_as<M, TorusLinearMap>;

template <class M>
concept ExpandingInterval = std::same_as<M, PiecewiseLinearMap> || std::same_as<M, NeutralMap>;

static_assert(PiecewiseBijective<PiecewiseLinearMap>);
static_assert(PiecewiseBijective<NeutralMap>);
static_assert(PiecewiseBijective<HyperbolicAffine2D>);
static_assert(PiecewiseBijective<TorusLinearMap>);

using AnyMap = std::variant<PiecewiseLinearMap, NeutralMap, HyperbolicAffine2D, TorusLinearMap>;

inline std::string map_name(const AnyMap& m) {
  return std::visit(
      [](const auto& map) -> std::string {
        using M = std::decay_t<decltype(map)>;
        if constexpr (std::same_as<M, PiecewiseLinearMap>) return "plin";
        else if constexpr (std::same_as<M, NeutralMap>) return "neutral";
        else if constexpr (std::same_as<M, HyperbolicAffine2D>) return "affine";
        else return "torus";
      },
      m);
}

}  // namespace glueshadow
