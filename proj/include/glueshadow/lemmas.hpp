#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "glueshadow/core.hpp"
#include "glueshadow/errors.hpp"
#include "glueshadow/maps.hpp"

namespace glueshadow {

struct ProductBounds {
  double product = 1.0;             ///< prod (1 + b_k)
  double upper = 1.0;               ///< exp(sum b_k)
  std::optional<double> lower;      ///< 1 + sum b_k, only when every b_k >= 0
};

/// 1 + S <= prod (1 + b_k) <= e^S with S = sum b_k (lower bound for
/// nonnegative b only). The product is accumulated in log space.
inline ProductBounds product_bounds(std::span<const double> b) {
  double logp = 0.0, s = 0.0;
  bool nonneg = true;
  for (double v : b) {
    if (!(1.0 + v > 0.0)) throw domain_error("product factor 1 + b_k must be positive");
    logp += std::log1p(v);
    s += v;
    nonneg = nonneg && v >= 0.0;
  }
  ProductBounds r;
  r.product = std::exp(logp);
  r.upper = std::exp(s);
  if (nonneg) r.lower = 1.0 + s;
  const double slack = 1e-12 * r.upper;
  if (r.product > r.upper + slack || (r.lower && r.product < *r.lower - slack)) {
    throw numerical_failure("product bounds violated");
  }
  return r;
}

/// Model neutral branch tau(v) = v + R v^{1+alpha}.
struct NeutralBranch {
  double R = 1.0;
  double alpha = 0.5;

  NeutralBranch(double R_, double alpha_) : R(R_), alpha(alpha_) {
    if (!(R > 0)) throw usage_error("neutral branch needs R > 0");
    if (!(alpha >= 0)) throw usage_error("neutral branch needs alpha >= 0");
  }

  double tau(double v) const { return v + R * std::pow(v, 1.0 + alpha); }
  double derivative(double v) const { return 1.0 + R * (1.0 + alpha) * std::pow(v, alpha); }

  double inverse(double v) const {
    if (v == 0.0) return 0.0;
    return solve_increasing([this](double x) { return tau(x); }, [this](double x) { return derivative(x); }, v,
                            0.0, v, v / (1.0 + R));
  }
};

struct OneStepBounds {
  double u = 0.0;    ///< v / (1 + R v^alpha)
  double inv = 0.0;  ///< tau^{-1}(v)
  double w = 0.0;    ///< tangent-line bound
};

/// u <= tau^{-1} v <= w <= v. Convexity gives both: u = v / (1 + R v^alpha)
/// and w is one Newton step from v, where the tangent of tau at v takes the
/// value v:  w = v (1 - R v^alpha / (1 + (1+alpha) R v^alpha)).
inline OneStepBounds neutral_one_step_bounds(const NeutralBranch& nb, double v) {
  if (!(v > 0.0 && v <= 1.0)) throw usage_error("one-step bounds need 0 < v <= 1");
  OneStepBounds b;
  const double Rva = nb.R * std::pow(v, nb.alpha);
  b.u = v / (1.0 + Rva);
  b.inv = nb.inverse(v);
  b.w = v * (1.0 - Rva / (1.0 + (1.0 + nb.alpha) * Rva));
  const double slack = 1e-14 * v;
  if (b.u > b.inv + slack || b.inv > b.w + slack || b.w > v + slack) {
    throw numerical_failure("one-step sandwich violated");
  }
  return b;
}

/// tau^{-k}(v) for k = 0..n_max.
inline std::vector<double> neutral_inverse_iterates(const NeutralBranch& nb, double v, long n_max) {
  if (!(v > 0.0 && v <= 1.0)) throw usage_error("inverse iterates need 0 < v <= 1");
  if (n_max < 1) throw usage_error("n_max must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  out.push_back(v);
  for (long k = 1; k <= n_max; ++k) out.push_back(nb.inverse(out.back()));
  return out;
}

struct DecayFit {
  double K = 0.0;      ///< fitted constant
  double gamma = 0.0;  ///< fitted exponent: seq[n] ~ K n^{-gamma}
  double rss = 0.0;
};

/// Least squares of log seq[n] against log n over n in [lo, hi].
inline DecayFit fit_decay_exponent(std::span<const double> seq, long lo, long hi) {
  if (lo < 1 || hi <= lo || hi >= static_cast<long>(seq.size())) throw usage_error("bad fit range");
  std::vector<double> xs, ys;
  for (long n = lo; n <= hi; ++n) {
    double v = seq[static_cast<std::size_t>(n)];
    if (!(v > 0)) throw usage_error("decay fit needs positive values");
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(v));
  }
  auto f = linear_fit(xs, ys);
  return {std::exp(f.intercept), -f.slope, f.rss};
}

struct BackwardDecay {
  std::vector<double> distances;  ///< rho(T^{-k} u, {0,1}), k = 0..n
  std::optional<DecayFit> fit;    ///< on the second half of k, when it is positive throughout
  double C = 0.0;                 ///< smallest constant with distances[k] <= C k^{-gamma}, k >= 1
};

/// Distance of T^{-k} u to the neutral points along a branch path (cycled).
/// The fitted power law is turned into a bound by raising its constant.
inline BackwardDecay neutral_map_backward_bound(const NeutralMap& map, const State& u, long n,
                                                std::span<const int> branch_path) {
  if (n < 0) throw usage_error("n must be >= 0");
  if (branch_path.empty()) throw usage_error("empty branch path");
  for (int b : branch_path) {
    if (b != 0 && b != 1) throw usage_error("branch path entries must be 0 or 1");
  }
  BackwardDecay r;
  auto orbit = backward_orbit(map, u, static_cast<std::size_t>(n), branch_path);
  r.distances.reserve(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) {
    double x = orbit[-k][0];
    r.distances.push_back(std::min(x, 1.0 - x));
  }
  if (n >= 8) {
    bool positive = std::all_of(r.distances.begin() + n / 2, r.distances.end(), [](double d) { return d > 0; });
    if (positive) {
      r.fit = fit_decay_exponent(r.distances, n / 2, n);
      for (long k = 1; k <= n; ++k) {
        double shape = std::pow(static_cast<double>(k), -r.fit->gamma);
        r.C = std::max(r.C, r.distances[static_cast<std::size_t>(k)] / shape);
      }
    }
  }
  return r;
}

}  // namespace glueshadow
