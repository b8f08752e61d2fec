#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "glueshadow/core.hpp"
#include "glueshadow/gluing.hpp"
#include "glueshadow/maps.hpp"
#include "glueshadow/perturbation.hpp"
#include "glueshadow/rate.hpp"

namespace glueshadow {

/// Inclusive index range of the pseudo-trajectory with no moment strictly
/// inside. The gap of moment t sits between t and t+1, so t ends a segment.
struct Segment {
  long start = 0;
  long end = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

inline std::vector<Segment> extract_segments(const PseudoTrajectory& p) {
  std::vector<Segment> out;
  if (p.window.empty()) return out;
  long start = p.window.first_index();
  for (long m : p.moments) {
    out.push_back({start, m});
    start = m + 1;
  }
  out.push_back({start, p.window.last_index()});
  return out;
}

/// Sentinel tau for a level with fewer than two moments.
inline constexpr long kUnboundedTau = std::numeric_limits<long>::max();

/// State of the merge schedule at the start of one level.
struct MergeLevel {
  int level = 0;
  std::vector<long> moments;   ///< moments still open
  std::vector<double> gaps;    ///< current gap at each open moment
  long tau_min = kUnboundedTau;  ///< shortest distance between consecutive open moments
  std::vector<long> consumed;  ///< moments resolved at this level
};

struct GapRecursion {
  std::vector<double> bounds;  ///< bound on the gaps at each level, bounds[0] = D
  double final_bound = 0.0;    ///< bound after the last level
  double closing_bound = 0.0;  ///< D e^Phi
  double factor = 1.0;         ///< product of (1 + phi(-tau) + phi(tau))
  bool observed_ok = true;     ///< every recorded gap is within its level bound
  bool closing_ok = true;      ///< final_bound <= D e^Phi
};

/// Propagates gbar^{(n+1)} = gbar^{(n)} (1 + phi(-tau^{(n)}) + phi(tau^{(n)}))
/// from gbar^{(0)} = D, using the monotone envelope of phi, and checks the
/// observed level gaps against it.
inline GapRecursion gap_recursion_bound(const RateFunction& phi, const std::vector<MergeLevel>& levels, double D) {
  const RateFunction env = monotone_envelope(phi);
  GapRecursion g;
  double current = D;
  long prev_tau = 0;
  for (const auto& L : levels) {
    if (L.tau_min <= prev_tau) throw usage_error("tau must be strictly increasing across levels");
    prev_tau = L.tau_min;
    g.bounds.push_back(current);
    for (double gap : L.gaps) {
      if (gap > current * (1.0 + 1e-9) + 1e-15) g.observed_ok = false;
    }
    double step = 1.0;
    if (L.tau_min != kUnboundedTau) step += env(-L.tau_min) + env(L.tau_min);
    g.factor *= step;
    current *= step;
  }
  g.final_bound = current;
  g.closing_bound = D * std::exp(summate(phi).Phi);
  g.closing_ok = g.final_bound <= g.closing_bound * (1.0 + 1e-12);
  return g;
}

struct ShadowOptions {
  RateFunction rate = RateFunction::zero();  ///< gluing rate of the map
  double D = 1.0;                            ///< perturbation amplitude cap
  GlueOptions glue{};
};

struct BoundChecks {
  double density = 0.0;        ///< limsup estimate of the moment density
  double avg_bound = 0.0;      ///< Phi D density (bounded space) or Phi D e^Phi density
  bool avg_ok = false;
  double eps_uniform = 0.0;    ///< largest input gap
  double uniform_bound = 0.0;  ///< recursion factor * Phi * eps_uniform
  double K_emp = 0.0;          ///< uniform_err / (Phi eps_uniform)
  bool uniform_ok = false;
  std::optional<GapRecursion> gaps;  ///< parallel schedule only
};

struct ShadowingReport {
  TrajectoryWindow y;
  TrajectoryWindow z;
  std::vector<double> errors;  ///< rho(z_t, y_t) per index
  double uniform_err = 0.0;
  std::vector<double> Qn;
  double Q_limsup = 0.0;
  double limit_err = 0.0;
  std::vector<MergeLevel> levels;
  double Phi = 0.0;
  double D = 0.0;
  bool truncated = false;       ///< some glue correction was cut at the window edge
  std::size_t glue_calls = 0;
  double anchor_limit = 0.0;    ///< D e^Phi
  std::size_t anchor_violations = 0;
  double max_anchor = 0.0;
  bool phi_one_flag = false;    ///< phi(1) >= 1 or phi(-1) >= 1
  std::size_t branch_fallbacks = 0;
  BoundChecks checks;
};

inline double uniform_error(const TrajectoryWindow& z, const TrajectoryWindow& y);
struct AverageError {
  std::vector<double> Qn;
  double limsup = 0.0;
};
inline AverageError average_error(const TrajectoryWindow& z, const TrajectoryWindow& y);
inline double limit_error(const TrajectoryWindow& z, const TrajectoryWindow& y);

namespace detail {

/// Working copy of the trajectory being merged, plus bookkeeping shared by
/// both schedules.
template <PiecewiseBijective M>
class Merger {
 public:
  Merger(const M& map, const PseudoTrajectory& p, const ShadowOptions& opt)
      : map_(map), opt_(opt), pts_(p.window.points()), first_(p.window.first_index()),
        last_(p.window.last_index()) {
    report_.y = p.window;
    report_.D = opt.D;
    report_.Phi = summate(opt.rate).Phi;
    report_.anchor_limit = opt.D * std::exp(report_.Phi);
    report_.phi_one_flag = opt.rate(1) >= 1.0 || opt.rate(-1) >= 1.0;
    glue_opt_ = opt.glue;
    glue_opt_.rate.reset();
  }

  long first() const { return first_; }
  long last() const { return last_; }
  const State& at(long i) const { return pts_[static_cast<std::size_t>(i - first_)]; }

  double gap(long m) const { return distance(map_.forward(at(m)), at(m + 1)); }

  /// Replaces [left_start, right_end] by the trajectory gluing the segment
  /// ending at `moment` to the one starting at moment + 1.
  void glue_around(long left_start, long moment, long right_end, int level) {
    std::vector<State> xs(pts_.begin() + (left_start - first_), pts_.begin() + (moment - first_) + 1);
    xs.push_back(map_.forward(at(moment)));
    TrajectoryWindow x(std::move(xs), static_cast<std::size_t>(moment + 1 - left_start));
    std::vector<State> ys(pts_.begin() + (moment + 1 - first_), pts_.begin() + (right_end - first_) + 1);
    TrajectoryWindow y(std::move(ys), 0);

    double anchor = distance(x[0], y[0]);
    ++report_.glue_calls;
    report_.max_anchor = std::max(report_.max_anchor, anchor);
    if (anchor > report_.anchor_limit * (1.0 + 1e-12)) ++report_.anchor_violations;

    GluingReport g;
    try {
      g = glue_quiet(x, y);
    } catch (const gluing_failure& e) {
      throw gluing_failure(std::string(e.what()) + " (level " + std::to_string(level) + ", moment " +
                               std::to_string(moment) + ")",
                           moment + 1 + e.index(), level);
    }
    report_.branch_fallbacks += g.branch_fallbacks;
    const auto& zp = g.z.points();
    std::copy(zp.begin(), zp.end(), pts_.begin() + (left_start - first_));

    const long origin = moment + 1;
    if (left_start == first_ && opt_.rate(left_start - origin) > 1e-15) report_.truncated = true;
    if (right_end == last_ && opt_.rate(right_end - origin) > 1e-15) report_.truncated = true;
  }

  MergeLevel snapshot(int level, const std::vector<long>& moments) const {
    MergeLevel L;
    L.level = level;
    L.moments = moments;
    L.gaps.reserve(moments.size());
    for (long m : moments) L.gaps.push_back(gap(m));
    for (std::size_t i = 1; i < moments.size(); ++i) L.tau_min = std::min(L.tau_min, moments[i] - moments[i - 1]);
    return L;
  }

  ShadowingReport& report() { return report_; }

  ShadowingReport finish(const PseudoTrajectory& p, bool parallel) {
    ShadowingReport& r = report_;
    r.z = TrajectoryWindow(std::move(pts_), static_cast<std::size_t>(-first_));
    r.errors.reserve(r.z.size());
    for (long t = first_; t <= last_; ++t) r.errors.push_back(distance(r.z[t], r.y[t]));
    r.uniform_err = uniform_error(r.z, r.y);
    auto avg = average_error(r.z, r.y);
    r.Qn = std::move(avg.Qn);
    r.Q_limsup = avg.limsup;
    r.limit_err = limit_error(r.z, r.y);

    BoundChecks& c = r.checks;
    c.density = upper_density(p.moments, p.window).limsup;
    const bool bounded = p.window.space() != Space::plane;
    c.avg_bound = r.Phi * r.D * (bounded ? 1.0 : std::exp(r.Phi)) * c.density;
    c.avg_ok = r.Q_limsup <= c.avg_bound * (1.0 + 1e-12) + 1e-15;
    c.eps_uniform = p.max_gap();
    double factor = 1.0;
    if (parallel && !r.levels.empty()) {
      c.gaps = gap_recursion_bound(opt_.rate, r.levels, r.D);
      factor = c.gaps->factor;
    } else if (parallel) {
      c.gaps = GapRecursion{{}, r.D, r.D * std::exp(r.Phi), 1.0, true, true};
    }
    c.uniform_bound = factor * r.Phi * c.eps_uniform;
    c.K_emp = c.eps_uniform > 0 && r.Phi > 0 ? r.uniform_err / (r.Phi * c.eps_uniform) : 0.0;
    c.uniform_ok = r.uniform_err <= c.uniform_bound * (1.0 + 1e-12) + 1e-15;
    return std::move(r);
  }

 private:
  GluingReport glue_quiet(const TrajectoryWindow& x, const TrajectoryWindow& y) const {
    GluingReport g;
    std::size_t fb = 0;
    detail::check_inputs(map_, x, y);
    auto zp = detail::glue_points(map_, x, y, glue_opt_, fb);
    g.z = TrajectoryWindow(std::move(zp), static_cast<std::size_t>(x.neg_len()));
    g.branch_fallbacks = fb;
    return g;
  }

  const M& map_;
  const ShadowOptions& opt_;
  GlueOptions glue_opt_;
  std::vector<State> pts_;
  long first_, last_;
  ShadowingReport report_;
};

}  // namespace detail

/// Hierarchical merging: at each level the segments are glued pairwise
/// around the open moments at even positions (0-based) of the sorted list,
/// the odd ones stay open, so each level halves the open moments and every
/// moment is resolved exactly once. A segment left without a partner merges
/// at the next level. Pairs on one level touch disjoint index ranges.
template <PiecewiseBijective M>
ShadowingReport parallel_glue(const M& map, const PseudoTrajectory& p, const ShadowOptions& opt) {
  if (p.window.size() < 2) throw usage_error("pseudo-trajectory too short");
  detail::Merger<M> mg(map, p, opt);
  std::vector<long> open = p.moments;
  int level = 0;
  while (!open.empty()) {
    MergeLevel L = mg.snapshot(level, open);
    std::vector<long> survivors;
    survivors.reserve(open.size() / 2);
    for (std::size_t j = 0; j < open.size(); ++j) {
      if (j % 2 == 1) {
        survivors.push_back(open[j]);
        continue;
      }
      long left_start = j == 0 ? mg.first() : open[j - 1] + 1;
      long right_end = j + 1 < open.size() ? open[j + 1] : mg.last();
      mg.glue_around(left_start, open[j], right_end, level);
      L.consumed.push_back(open[j]);
    }
    mg.report().levels.push_back(std::move(L));
    open = std::move(survivors);
    ++level;
  }
  return mg.finish(p, true);
}

/// Sequential merging: start from the segment holding index 0 and glue on
/// the right neighbour, then the left one, alternating. Each glue is
/// recorded as its own level with the single moment it resolves.
template <PiecewiseBijective M>
ShadowingReport consecutive_glue(const M& map, const PseudoTrajectory& p, const ShadowOptions& opt) {
  if (p.window.size() < 2) throw usage_error("pseudo-trajectory too short");
  detail::Merger<M> mg(map, p, opt);
  const auto segs = extract_segments(p);
  const auto& mom = p.moments;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < segs.size(); ++j) {
    if (segs[j].start <= 0 && segs[j].end >= 0) {
      lo = j;
      break;
    }
  }
  std::size_t hi = lo;
  bool right_turn = true;
  int level = 0;
  while (lo > 0 || hi + 1 < segs.size()) {
    const bool go_right = hi + 1 < segs.size() && (right_turn || lo == 0);
    const long m = go_right ? mom[hi] : mom[lo - 1];
    MergeLevel L = mg.snapshot(level, {m});
    L.tau_min = segs[hi].end - segs[lo].start + 1;
    if (go_right) {
      mg.glue_around(segs[lo].start, m, segs[hi + 1].end, level);
      ++hi;
    } else {
      mg.glue_around(segs[lo - 1].start, m, segs[hi].end, level);
      --lo;
    }
    L.consumed.push_back(m);
    mg.report().levels.push_back(std::move(L));
    right_turn = !right_turn;
    ++level;
  }
  return mg.finish(p, false);
}

// --- shadowing error functionals ------------------------------------------------

namespace detail {
inline void check_same_window(const TrajectoryWindow& z, const TrajectoryWindow& y) {
  if (z.size() != y.size() || z.neg_len() != y.neg_len()) throw usage_error("windows differ");
}
}  // namespace detail

/// sup_t rho(z_t, y_t).
inline double uniform_error(const TrajectoryWindow& z, const TrajectoryWindow& y) {
  detail::check_same_window(z, y);
  double m = 0.0;
  for (long t = z.first_index(); t <= z.last_index(); ++t) m = std::max(m, distance(z[t], y[t]));
  return m;
}

/// Running means Q_n of rho(z_t, y_t) (symmetric, or one-sided without a
/// negative part) and their max over the final half as the limsup estimate.
inline AverageError average_error(const TrajectoryWindow& z, const TrajectoryWindow& y) {
  detail::check_same_window(z, y);
  std::vector<double> e;
  e.reserve(z.size());
  for (long t = z.first_index(); t <= z.last_index(); ++t) e.push_back(distance(z[t], y[t]));
  AverageError a;
  a.Qn = detail::running_means(e, z.first_index(), z.last_index());
  a.limsup = detail::final_half_max(a.Qn);
  return a;
}

/// Max pointwise distance over the final half of each side of the window.
inline double limit_error(const TrajectoryWindow& z, const TrajectoryWindow& y) {
  detail::check_same_window(z, y);
  double m = 0.0;
  const long last = z.last_index();
  for (long t = last / 2; t <= last; ++t) m = std::max(m, distance(z[t], y[t]));
  const long first = z.first_index();
  if (first < 0) {
    for (long t = first; t <= first / 2; ++t) m = std::max(m, distance(z[t], y[t]));
  }
  return m;
}

enum class ShadowKind { U, A, L };

inline const char* to_string(ShadowKind k) {
  switch (k) {
    case ShadowKind::U: return "U";
    case ShadowKind::A: return "A";
    case ShadowKind::L: return "L";
  }
  return "?";
}

struct ShadowingVerdict {
  double delta = 0.0;  ///< observed accuracy in the beta sense
  double K_emp = 0.0;  ///< delta / eps
  std::optional<double> bound;
  std::optional<bool> pass;  ///< empty when no bound is known for the pair
};

/// Observed (alpha+beta) shadowing accuracy and, where a bound is proved,
/// the comparison: (U+*) against the gap-recursion factor times Phi eps,
/// (R+A) against Phi D eps (times e^Phi on the unbounded plane).
inline ShadowingVerdict check_shadowing(PseudoKind alpha, ShadowKind beta, double eps, const ShadowingReport& r) {
  ShadowingVerdict v;
  switch (beta) {
    case ShadowKind::U: v.delta = r.uniform_err; break;
    case ShadowKind::A: v.delta = r.Q_limsup; break;
    case ShadowKind::L: v.delta = r.limit_err; break;
  }
  v.K_emp = eps > 0 ? v.delta / eps : 0.0;
  if (alpha == PseudoKind::U) {
    double factor = r.checks.gaps ? r.checks.gaps->factor : std::exp(r.Phi);
    v.bound = factor * r.Phi * eps;
  } else if (alpha == PseudoKind::R && beta == ShadowKind::A) {
    const bool bounded = r.y.space() != Space::plane;
    v.bound = r.Phi * r.D * (bounded ? 1.0 : std::exp(r.Phi)) * eps;
  }
  if (v.bound) v.pass = v.delta <= *v.bound * (1.0 + 1e-12) + 1e-15;
  return v;
}

}  // namespace glueshadow
