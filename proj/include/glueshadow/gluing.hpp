#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "glueshadow/core.hpp"
#include "glueshadow/maps.hpp"
#include "glueshadow/rate.hpp"

namespace glueshadow {

/// What to do when the inverse branch selected by x does not cover z_k.
enum class BranchPolicy {
  strict,    ///< throw gluing_failure
  fallback,  ///< take the preimage on another branch that covers z_k
};

struct GlueOptions {
  std::optional<RateFunction> rate;  ///< verdicts use the fitted rate when absent
  BranchPolicy policy = BranchPolicy::strict;
  double torus_eps0 = 0.25;  ///< torus gluing is local: rho(x_0, y_0) must not exceed this
};

/// Result of gluing a backward semi-trajectory x to a forward one y at time 0.
struct GluingReport {
  TrajectoryWindow z;
  std::vector<double> back_errors;  ///< back_errors[j] = rho(x_k, z_k), k = -(j+1)
  std::vector<double> fwd_errors;   ///< fwd_errors[k] = rho(y_k, z_k), k >= 0
  double anchor_distance = 0.0;     ///< rho(x_0, y_0)
  std::optional<RateFunction> rate;  ///< rate the verdicts were computed against
  std::optional<RateFunction> fitted_rate;
  bool strong_ok = false;
  bool weak_ok = false;
  std::size_t branch_fallbacks = 0;

  long first_index() const { return -static_cast<long>(back_errors.size()); }
  long last_index() const { return static_cast<long>(fwd_errors.size()) - 1; }
  double error(long k) const {
    return k < 0 ? back_errors[static_cast<std::size_t>(-k - 1)] : fwd_errors[static_cast<std::size_t>(k)];
  }
};

enum class GluingMode { strong, weak };

/// strong: error(k) <= phi(k) * rho(x_0, y_0); weak: error(k) <= phi(k).
inline bool verify_gluing(const GluingReport& r, const RateFunction& phi, GluingMode mode) {
  if (phi.is_tabulated() && (phi.table().first() > r.first_index() || phi.table().last() < r.last_index())) {
    throw usage_error("rate table does not cover the report window");
  }
  const double scale = mode == GluingMode::strong ? r.anchor_distance : 1.0;
  for (long k = r.first_index(); k <= r.last_index(); ++k) {
    if (r.error(k) > phi(k) * scale + 1e-12) return false;
  }
  return true;
}

namespace detail {

struct SideFit {
  bool geometric = true;
  double scale = 0.0;
  double param = 0.0;  ///< q per step, or gamma
  double rss = 0.0;
  std::size_t points = 0;
};

/// Fits errors e(|k|) on one side by both log-linear families and keeps the
/// one with the smaller residual; the scale is then raised until the fitted
/// shape dominates every data point.
inline std::optional<SideFit> fit_side(const std::vector<std::pair<long, double>>& data) {
  std::vector<double> ks, lks, les;
  for (auto [k, e] : data) {
    if (e > 0 && std::isfinite(e)) {
      ks.push_back(static_cast<double>(k));
      les.push_back(std::log(e));
      lks.push_back(k > 0 ? std::log(static_cast<double>(k)) : std::nan(""));
    }
  }
  if (ks.empty()) return std::nullopt;
  if (ks.size() < 8) throw usage_error("rate fit needs at least 8 nonzero errors per side");

  auto exp_fit = linear_fit(ks, les);

  std::vector<double> pk, pe;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] >= 1) {
      pk.push_back(lks[i]);
      pe.push_back(les[i]);
    }
  }
  std::optional<LinearFit> pow_fit;
  if (pk.size() >= 8) pow_fit = linear_fit(pk, pe);

  SideFit f;
  f.points = ks.size();
  if (pow_fit && pow_fit->rss < exp_fit.rss) {
    f.geometric = false;
    f.param = -pow_fit->slope;
    f.rss = pow_fit->rss;
  } else {
    f.geometric = true;
    f.param = std::min(std::exp(exp_fit.slope), 1.0);
    f.rss = exp_fit.rss;
  }
  Tail shape{f.geometric ? Tail::Kind::geometric : Tail::Kind::power, 1.0, f.param};
  double C = 0.0;
  for (auto [k, e] : data) {
    double s = shape(k);
    if (e > 0 && s > 0) C = std::max(C, e / s);
  }
  f.scale = C;
  return f;
}

inline Tail to_tail(const std::optional<SideFit>& f) {
  if (!f) return {};
  return {f->geometric ? Tail::Kind::geometric : Tail::Kind::power, f->scale, f->param};
}

}  // namespace detail

struct RateFitDetail {
  std::optional<detail::SideFit> back, fwd;
};

inline RateFitDetail fit_rate_detail(const GluingReport& r) {
  std::vector<std::pair<long, double>> b, f;
  for (std::size_t j = 0; j < r.back_errors.size(); ++j) b.emplace_back(static_cast<long>(j + 1), r.back_errors[j]);
  for (std::size_t k = 0; k < r.fwd_errors.size(); ++k) f.emplace_back(static_cast<long>(k), r.fwd_errors[k]);
  return {detail::fit_side(b), detail::fit_side(f)};
}

/// Empirical rate for the report's errors. Geometric sides decay as
/// C q^{|k|} (the forward q is 1/lambda_plus); power sides as C |k|^{-gamma}.
inline RateFunction fit_rate(const GluingReport& r) {
  auto d = fit_rate_detail(r);
  if (!d.back && !d.fwd) return RateFunction::zero();
  return RateFunction::from_tails(detail::to_tail(d.back), detail::to_tail(d.fwd));
}

namespace detail {

template <PiecewiseBijective M>
void check_inputs(const M& map, const TrajectoryWindow& x_back, const TrajectoryWindow& y_fwd) {
  if (x_back.empty() || y_fwd.empty()) throw usage_error("glue needs nonempty semi-trajectories");
  if (x_back.pos_len() != 1) throw usage_error("backward semi-trajectory must end at its index 0");
  if (y_fwd.neg_len() != 0) throw usage_error("forward semi-trajectory must start at index 0");
  if (x_back.space() != map.space() || y_fwd.space() != map.space()) {
    throw usage_error("semi-trajectories are not in the map's phase space");
  }
}

/// Expanding maps: z follows y forward and is pulled back along x's branches.
template <ExpandingInterval M>
std::vector<State> glue_points(const M& map, const TrajectoryWindow& x, const TrajectoryWindow& y,
                               const GlueOptions& opt, std::size_t& fallbacks) {
  const long neg = x.neg_len();
  std::vector<State> z(static_cast<std::size_t>(neg) + y.size());
  for (long k = 0; k < y.pos_len(); ++k) z[static_cast<std::size_t>(neg + k)] = y[k];
  for (long k = 0; k > -neg; --k) {
    const State& target = z[static_cast<std::size_t>(neg + k)];
    int b = map.branch_index(x[k - 1]);
    if (!map.covers(b, target)) {
      if (opt.policy == BranchPolicy::strict) {
        throw gluing_failure("branch " + std::to_string(b) + " of x at index " + std::to_string(k - 1) +
                                 " does not cover z = " + std::to_string(target[0]),
                             k - 1);
      }
      int alt = -1;
      for (int c = 0; c < map.branch_count(); ++c) {
        if (map.covers(c, target)) {
          alt = c;
          break;
        }
      }
      if (alt < 0) throw gluing_failure("no branch covers z at index " + std::to_string(k), k - 1);
      b = alt;
      ++fallbacks;
    }
    z[static_cast<std::size_t>(neg + k - 1)] = map.preimage(b, target);
  }
  return z;
}

/// Hyperbolic maps: z_0 is where the unstable line through x_0 meets the
/// stable line through y_0; then z_k = x_k + lambda1^k s e1 for k < 0 and
/// z_k = y_k + lambda2^k t e2 for k >= 0.
template <HyperbolicLinear M>
std::vector<State> glue_points(const M& map, const TrajectoryWindow& x, const TrajectoryWindow& y,
                               const GlueOptions& opt, std::size_t&) {
  const auto& eig = map.eigen();
  const State& x0 = x[0];
  const State& y0 = y[0];
  Vec2 d = y0.coords() - x0.coords();
  if constexpr (std::same_as<M, TorusLinearMap>) {
    if (distance(x0, y0) > opt.torus_eps0) {
      throw gluing_failure("torus gluing is local: rho(x_0, y_0) exceeds eps0", 0);
    }
    for (auto& c : d) c -= std::round(c);  // nearest lift of y_0
  }
  // x0 + s e1 = y0 + t e2
  auto [s, tneg] = basis_coordinates(eig.e1, eig.e2, d);
  const double t = -tneg;
  const long neg = x.neg_len();
  std::vector<State> z(static_cast<std::size_t>(neg) + y.size());
  for (long k = -neg; k < 0; ++k) {
    Vec2 c = x[k].coords() + (s * std::pow(eig.lambda1, static_cast<double>(k))) * eig.e1;
    z[static_cast<std::size_t>(neg + k)] = State::in(map.space(), c);
  }
  for (long k = 0; k < y.pos_len(); ++k) {
    Vec2 c = y[k].coords() + (t * std::pow(eig.lambda2, static_cast<double>(k))) * eig.e2;
    z[static_cast<std::size_t>(neg + k)] = State::in(map.space(), c);
  }
  return z;
}

}  // namespace detail

/// Builds a true trajectory z that follows the backward semi-trajectory
/// x_back (indices <= 0) in the past and y_fwd (indices >= 0) in the future.
template <PiecewiseBijective M>
GluingReport glue(const M& map, const TrajectoryWindow& x_back, const TrajectoryWindow& y_fwd,
                  const GlueOptions& opt = {}) {
  detail::check_inputs(map, x_back, y_fwd);
  GluingReport r;
  auto pts = detail::glue_points(map, x_back, y_fwd, opt, r.branch_fallbacks);
  r.z = TrajectoryWindow(std::move(pts), static_cast<std::size_t>(x_back.neg_len()));
  r.anchor_distance = distance(x_back[0], y_fwd[0]);
  for (long k = -1; k >= x_back.first_index(); --k) r.back_errors.push_back(distance(x_back[k], r.z[k]));
  for (long k = 0; k <= y_fwd.last_index(); ++k) r.fwd_errors.push_back(distance(y_fwd[k], r.z[k]));

  try {
    r.fitted_rate = fit_rate(r);
  } catch (const usage_error&) {
    // too few nonzero errors for a fit
  }
  r.rate = opt.rate ? opt.rate : r.fitted_rate;
  if (r.rate) {
    r.strong_ok = verify_gluing(r, *r.rate, GluingMode::strong);
    r.weak_ok = verify_gluing(r, *r.rate, GluingMode::weak);
  }
  return r;
}

/// Glues the bi-infinite windows x and y at time tau: the result follows x
/// for indices < tau and y for indices >= tau, indexed like x and y.
template <PiecewiseBijective M>
GluingReport glue_at(const M& map, const TrajectoryWindow& x, const TrajectoryWindow& y, long tau,
                     const GlueOptions& opt = {}) {
  auto r = glue(map, backward_part(shift(x, tau)), forward_part(shift(y, tau)), opt);
  r.z = shift(r.z, -tau);
  return r;
}

// --- rate functions the constructions satisfy ---------------------------------

/// Strong rate of the hyperbolic maps: C lambda2^k forward, C lambda1^{-|k|}
/// backward, C the eigenbasis condition number.
template <HyperbolicLinear M>
RateFunction hyperbolic_rate(const M& map) {
  const auto& e = map.eigen();
  return RateFunction::exp_two_sided(map.condition_constant(), 1.0 / e.lambda2, 1.0 / e.lambda1);
}

/// Strong rate of a full-branch piecewise linear map with min(a,b) > 1:
/// phi(k) = min(a,b)^k for k <= 0, zero for k > 0.
inline RateFunction piecewise_linear_rate(const PiecewiseLinearMap& map) {
  const double m = std::min(map.a(), map.b());
  if (!map.full_branch() || !(m > 1.0)) {
    throw usage_error("piecewise linear map has no summable gluing rate");
  }
  return RateFunction::exp_two_sided(1.0, std::numeric_limits<double>::infinity(), 1.0 / m);
}

/// Weak power rate of the neutral map, fitted on the slowest backward
/// approach: x = {0} glued to y_0 = 1 over `window` steps.
inline RateFunction neutral_weak_rate(const NeutralMap& map, long window = 4096) {
  std::vector<int> left{0};
  auto x = backward_orbit(map, State::interval(0.0), static_cast<std::size_t>(window), left);
  auto y = forward_orbit(map, State::interval(1.0), 1);
  auto r = glue(map, x, y);
  auto d = fit_rate_detail(r);
  if (!d.back) throw numerical_failure("neutral rate fit found no backward errors");
  Tail t{Tail::Kind::power, d.back->scale, d.back->param};
  if (d.back->geometric) t.kind = Tail::Kind::geometric;
  // phi(0) must cover the anchor distance 1 of this pair
  t.scale = std::max(t.scale, 1.0);
  return RateFunction::from_tails(t, Tail{});
}

template <PiecewiseBijective M>
RateFunction gluing_rate(const M& map) {
  if constexpr (HyperbolicLinear<M>) return hyperbolic_rate(map);
  else if constexpr (std::same_as<M, PiecewiseLinearMap>) return piecewise_linear_rate(map);
  else return neutral_weak_rate(map);
}

}  // namespace glueshadow
