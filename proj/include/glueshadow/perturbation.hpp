#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "glueshadow/core.hpp"
#include "glueshadow/maps.hpp"
#include "glueshadow/rng.hpp"

namespace glueshadow {

inline constexpr double kDefaultGapThreshold = 1e-12;

/// A window together with its gaps gamma_i = rho(T y_i, y_{i+1}) and the
/// perturbation moments N(y) = { i : gamma_i > threshold }.
struct PseudoTrajectory {
  TrajectoryWindow window;
  std::vector<double> gaps;  ///< gaps[j] belongs to index first_index() + j
  std::vector<long> moments;
  double gap_threshold = kDefaultGapThreshold;

  double gap(long i) const { return gaps[static_cast<std::size_t>(i - window.first_index())]; }
  double max_gap() const { return gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end()); }
};

template <PiecewiseBijective M>
PseudoTrajectory compute_gaps(const M& map, TrajectoryWindow w,
                              double gap_threshold = kDefaultGapThreshold) {
  if (gap_threshold < 0) throw usage_error("gap threshold must be >= 0");
  PseudoTrajectory p;
  p.gap_threshold = gap_threshold;
  if (w.size() >= 2) {
    p.gaps.reserve(w.size() - 1);
    for (long i = w.first_index(); i < w.last_index(); ++i) {
      double g = distance(map.forward(w[i]), w[i + 1]);
      p.gaps.push_back(g);
      if (g > gap_threshold) p.moments.push_back(i);
    }
  }
  p.window = std::move(w);
  return p;
}

enum class PseudoKind { U, A, R };

inline const char* to_string(PseudoKind k) {
  switch (k) {
    case PseudoKind::U: return "U";
    case PseudoKind::A: return "A";
    case PseudoKind::R: return "R";
  }
  return "?";
}

struct PerturbationSpec {
  PseudoKind kind = PseudoKind::R;
  double epsilon = 0.01;  ///< U: max amplitude, A: twice the mean amplitude, R: density
  double D = 1.0;         ///< amplitude cap (A and R)
  std::uint64_t seed = 0;
  std::size_t neg_len = 0;
  std::size_t pos_len = 1000;
  std::optional<Vec2> start;  ///< y at the first index; random when absent
};

struct GeneratedPseudo {
  PseudoTrajectory pseudo;
  std::vector<double> injected;  ///< requested displacement norm per step
  std::size_t clamped = 0;       ///< steps whose displacement was cut at the boundary
};

inline double space_diameter(Space s) {
  switch (s) {
    case Space::interval: return 1.0;
    case Space::torus: return std::sqrt(0.5);
    case Space::plane: return std::numeric_limits<double>::infinity();
  }
  return 0;
}

inline void validate(const PerturbationSpec& spec, Space space) {
  if (!(spec.epsilon >= 0)) throw usage_error("epsilon must be >= 0");
  if (spec.kind == PseudoKind::R && spec.epsilon > 1) throw usage_error("R-type density must be <= 1");
  if (!(spec.D > 0)) throw usage_error("amplitude cap D must be > 0");
  if (spec.D > space_diameter(space) + 1e-12) throw usage_error("amplitude cap D exceeds the diameter");
  if (spec.neg_len + spec.pos_len < 2) throw usage_error("pseudo-trajectory window too short");
}

namespace detail {

/// Moves `from` by `amount` in a random direction; interval targets flip
/// direction when they would leave [0,1], and a step too long for either
/// direction is reflected off the far end (recorded as clamped). The torus
/// wraps.
inline State displace(const State& from, double amount, Rng& rng, bool& clamped) {
  switch (from.space()) {
    case Space::interval: {
      double v = from[0];
      double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
      double t = v + dir * amount;
      if (t < 0.0 || t > 1.0) t = v - dir * amount;
      if (t < 0.0 || t > 1.0) {
        clamped = true;
        t = v >= 0.5 ? v - amount : v + amount;
        t = t < 0.0 ? std::min(-t, 1.0) : std::max(2.0 - t, 0.0);
      }
      return State::interval(t);
    }
    case Space::plane:
    case Space::torus: {
      double th = 2.0 * std::numbers::pi * rng.uniform();
      Vec2 c = from.coords() + Vec2{amount * std::cos(th), amount * std::sin(th)};
      return State::in(from.space(), c);
    }
  }
  return from;
}

}  // namespace detail

template <PiecewiseBijective M>
GeneratedPseudo generate_pseudo(const M& map, const PerturbationSpec& spec,
                                double gap_threshold = kDefaultGapThreshold) {
  validate(spec, map.space());
  Rng rng(spec.seed);
  const std::size_t n = spec.neg_len + spec.pos_len;
  const int dim = dimension(map.space());

  State y0;
  if (spec.start) {
    y0 = State::in(map.space(), *spec.start);
  } else {
    Vec2 c{rng.uniform(), dim == 2 ? rng.uniform() : 0.0};
    y0 = State::in(map.space(), c);
  }

  // mean of |N(0, s^2)| is s*sqrt(2/pi); pick s so the mean is epsilon/2
  const double sigma = spec.epsilon / 2.0 * std::sqrt(std::numbers::pi / 2.0);

  GeneratedPseudo out;
  out.injected.reserve(n - 1);
  std::vector<State> pts;
  pts.reserve(n);
  pts.push_back(y0);
  for (std::size_t i = 1; i < n; ++i) {
    State next = map.forward(pts.back());
    double amount = 0.0;
    switch (spec.kind) {
      case PseudoKind::U: {
        double u = rng.uniform();
        amount = spec.epsilon * (dim == 1 ? u : std::sqrt(u));
        break;
      }
      case PseudoKind::A: amount = std::min(spec.D, std::abs(sigma * rng.normal())); break;
      case PseudoKind::R:
        if (rng.bernoulli(spec.epsilon)) amount = spec.D * (1.0 - rng.uniform());
        break;
    }
    if (amount > 0.0) {
      bool cl = false;
      next = detail::displace(next, amount, rng, cl);
      if (cl) ++out.clamped;
    }
    out.injected.push_back(amount);
    pts.push_back(next);
  }
  out.pseudo = compute_gaps(map, TrajectoryWindow(std::move(pts), spec.neg_len), gap_threshold);
  return out;
}

/// U-type pseudo-orbit pinned near the neutral fixed point 0: it sits at the
/// point x* where the drift T x - x equals eps and every step removes that
/// drift, so every gap is eps. True orbits near x* escape, so its uniform
/// shadowing error cannot stay proportional to eps.
inline PseudoTrajectory neutral_trap_pseudo(const NeutralMap& map, double eps, std::size_t neg_len,
                                            std::size_t pos_len) {
  if (!(eps > 0) || !(eps < 1 - map.c())) throw usage_error("trap needs 0 < eps < 1 - c");
  double x = map.c() * std::pow(eps / (1.0 - map.c()), 1.0 / (1.0 + map.alpha()));
  std::vector<State> pts(neg_len + pos_len, State::interval(x));
  return compute_gaps(map, TrajectoryWindow(std::move(pts), neg_len));
}

/// rho(T y_i, y_{i+1}) <= eps at every index.
inline bool classify_uniform(const PseudoTrajectory& p, double eps) {
  return p.max_gap() <= eps + 1e-12;
}

namespace detail {

/// Running means of per-index values v over the window [-n, n] (symmetric),
/// or [0, n] when the window has no negative part. values[j] sits at index
/// first + j; entries past the end are not used.
inline std::vector<double> running_means(std::span<const double> values, long first, long last_index) {
  std::vector<double> out;
  if (values.empty()) return out;
  auto at = [&](long i) { return values[static_cast<std::size_t>(i - first)]; };
  if (first == 0) {
    double s = 0;
    for (long n = 0; n <= last_index; ++n) {
      s += at(n);
      out.push_back(s / static_cast<double>(n + 1));
    }
    return out;
  }
  long nmax = std::min(-first, last_index);
  if (nmax < 0) return out;
  double s = at(0);
  out.push_back(s);
  for (long n = 1; n <= nmax; ++n) {
    s += at(-n) + at(n);
    out.push_back(s / static_cast<double>(2 * n + 1));
  }
  return out;
}

inline double final_half_max(const std::vector<double>& seq) {
  if (seq.empty()) return 0.0;
  double m = 0;
  for (std::size_t n = seq.size() / 2; n < seq.size(); ++n) m = std::max(m, seq[n]);
  return m;
}

}  // namespace detail

struct AverageClassification {
  bool ok = false;
  std::optional<long> first_valid_n;
};

/// Smallest N >= n_min such that every computable running mean of the gaps
/// with n >= N is <= eps. Accepted only if N lies in the first half of the
/// computable range, so the bound is observed over at least half the window.
inline AverageClassification classify_average(const PseudoTrajectory& p, double eps, long n_min = 1) {
  if (n_min < 1) throw usage_error("N_min must be >= 1");
  auto means = detail::running_means(p.gaps, p.window.first_index(), p.window.last_index() - 1);
  AverageClassification out;
  if (means.empty()) return out;
  long last_bad = -1;
  for (long n = static_cast<long>(means.size()) - 1; n >= 0; --n) {
    if (means[static_cast<std::size_t>(n)] > eps + 1e-12) {
      last_bad = n;
      break;
    }
  }
  long N = std::max(n_min, last_bad + 1);
  long nmax = static_cast<long>(means.size()) - 1;
  if (N <= nmax / 2) {
    out.ok = true;
    out.first_valid_n = N;
  }
  return out;
}

struct DensityEstimate {
  std::vector<double> sequence;  ///< d_n for n = 0, 1, ...
  double limsup = 0.0;           ///< max of d_n over the final half
};

/// d_n = #(N cap [-n,n]) / (2n+1), or #(N cap [0,n]) / (n+1) for windows
/// without a negative part.
inline DensityEstimate upper_density(std::span<const long> moments, const TrajectoryWindow& w) {
  if (w.empty()) throw usage_error("empty window");
  std::vector<double> indicator(w.size(), 0.0);
  for (long m : moments) {
    if (w.contains(m)) indicator[static_cast<std::size_t>(m - w.first_index())] = 1.0;
  }
  DensityEstimate d;
  d.sequence = detail::running_means(indicator, w.first_index(), w.last_index());
  d.limsup = detail::final_half_max(d.sequence);
  return d;
}

}  // namespace glueshadow
