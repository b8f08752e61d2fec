#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "glueshadow/errors.hpp"

namespace glueshadow {

/// Piecewise-constant function on the integers [first, last], zero outside.
/// Run j covers [starts[j], starts[j+1]) and carries values[j].
class StepTable {
 public:
  StepTable() = default;

  /// Dense values for indices first, first+1, ...; equal neighbours collapse.
  static StepTable from_dense(long first, const std::vector<double>& values) {
    StepTable t;
    t.first_ = first;
    t.last_ = first + static_cast<long>(values.size()) - 1;
    for (std::size_t i = 0; i < values.size(); ++i) t.append(first + static_cast<long>(i), values[i]);
    return t;
  }

  /// Zero on [first, last] except at the given (index, value) points, which
  /// must be sorted by index.
  static StepTable from_points(long first, long last, const std::vector<std::pair<long, double>>& pts) {
    StepTable t;
    t.first_ = first;
    t.last_ = last;
    t.append(first, 0.0);
    for (auto [k, v] : pts) {
      if (k < first || k > last) throw usage_error("table point outside window");
      t.append(k, v);
      if (k < last) t.append(k + 1, 0.0);
    }
    return t;
  }

  long first() const { return first_; }
  long last() const { return last_; }
  bool empty() const { return starts_.empty(); }
  std::size_t runs() const { return starts_.size(); }

  double operator()(long k) const {
    if (starts_.empty() || k < first_ || k > last_) return 0.0;
    auto it = std::upper_bound(starts_.begin(), starts_.end(), k);
    return values_[static_cast<std::size_t>(it - starts_.begin()) - 1];
  }

  long run_end(std::size_t j) const { return j + 1 < starts_.size() ? starts_[j + 1] - 1 : last_; }
  long run_start(std::size_t j) const { return starts_[j]; }
  double run_value(std::size_t j) const { return values_[j]; }

  /// Sum over k in [lo, hi].
  double partial_sum(long lo, long hi) const {
    lo = std::max(lo, first_);
    hi = std::min(hi, last_);
    double s = 0.0;
    for (std::size_t j = 0; j < starts_.size(); ++j) {
      long a = std::max(lo, starts_[j]);
      long b = std::min(hi, run_end(j));
      if (a <= b) s += values_[j] * static_cast<double>(b - a + 1);
    }
    return s;
  }
  double total() const { return empty() ? 0.0 : partial_sum(first_, last_); }

  bool nonnegative() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0; });
  }

  void append(long start, double v) {
    if (!starts_.empty() && starts_.back() == start) {
      values_.back() = v;
      if (values_.size() >= 2 && values_[values_.size() - 2] == v) {
        starts_.pop_back();
        values_.pop_back();
      }
      return;
    }
    if (!values_.empty() && values_.back() == v) return;
    starts_.push_back(start);
    values_.push_back(v);
  }
  void set_window(long first, long last) {
    first_ = first;
    last_ = last;
  }

 private:
  long first_ = 0, last_ = -1;
  std::vector<long> starts_;
  std::vector<double> values_;
};

/// One side of a symbolic rate: zero, scale*q^{|k|} or scale*|k|^{-gamma}.
struct Tail {
  enum class Kind { zero, geometric, power };
  Kind kind = Kind::zero;
  double scale = 0.0;
  double param = 0.0;  ///< q in [0,1) for geometric, gamma > 0 for power

  double operator()(long k_abs) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::geometric:
        if (k_abs == 0) return scale;
        return param == 0.0 ? 0.0 : scale * std::pow(param, static_cast<double>(k_abs));
      case Kind::power:
        return k_abs == 0 ? scale : scale * std::pow(static_cast<double>(k_abs), -param);
    }
    return 0.0;
  }

  friend bool operator==(const Tail&, const Tail&) = default;
};

enum class Side { negative, positive, both };

struct Summation {
  double Phi = 0.0;
  double tail_bound = 0.0;     ///< bound on the part of the sum not computed exactly
  bool tail_observed = true;   ///< false for tables: nothing is known past the window
  bool converges = true;
};

/// Rate function phi: Z -> R_{>=0}, either symbolic (independent tails for
/// k < 0 and k > 0, phi(0) = the larger scale) or a step table.
class RateFunction {
 public:
  struct Symbolic {
    Tail back;  ///< k < 0
    Tail fwd;   ///< k > 0
    friend bool operator==(const Symbolic&, const Symbolic&) = default;
  };

  static RateFunction zero() { return RateFunction(Symbolic{}); }

  /// phi(k) = C lambda_plus^{-k} for k >= 0, C lambda_minus^{|k|} for k <= 0.
  /// lambda_plus = inf or lambda_minus = 0 make that side vanish past k = 0.
  static RateFunction exp_two_sided(double C, double lambda_plus, double lambda_minus) {
    if (!(C >= 0)) throw usage_error("rate constant must be >= 0");
    if (!(lambda_plus > 1.0)) throw usage_error("lambda_plus must exceed 1");
    if (!(lambda_minus >= 0.0 && lambda_minus < 1.0)) throw usage_error("lambda_minus must lie in [0,1)");
    Symbolic s;
    s.back = {Tail::Kind::geometric, C, lambda_minus};
    s.fwd = {Tail::Kind::geometric, C, std::isinf(lambda_plus) ? 0.0 : 1.0 / lambda_plus};
    return RateFunction(s);
  }

  /// phi(k) = C |k|^{-gamma} on the chosen side(s), phi(0) = C, zero elsewhere.
  static RateFunction power_one_sided(double C, double gamma, Side side) {
    if (!(C >= 0) || !(gamma > 0)) throw usage_error("power rate needs C >= 0, gamma > 0");
    Tail t{Tail::Kind::power, C, gamma};
    Symbolic s;
    if (side != Side::positive) s.back = t;
    if (side != Side::negative) s.fwd = t;
    return RateFunction(s);
  }

  static RateFunction from_tails(Tail back, Tail fwd) { return RateFunction(Symbolic{back, fwd}); }

  static RateFunction tabulated(StepTable t) {
    if (!t.nonnegative()) throw usage_error("rate table has negative entries");
    return RateFunction(std::move(t));
  }

  double operator()(long k) const {
    if (const auto* s = std::get_if<Symbolic>(&form_)) {
      if (k == 0) return std::max(s->back(0), s->fwd(0));
      return k < 0 ? s->back(-k) : s->fwd(k);
    }
    return std::get<StepTable>(form_)(k);
  }

  bool is_tabulated() const { return std::holds_alternative<StepTable>(form_); }
  const StepTable& table() const { return std::get<StepTable>(form_); }
  const Symbolic& symbolic() const { return std::get<Symbolic>(form_); }

  std::string describe() const;

  friend bool operator==(const RateFunction& a, const RateFunction& b) {
    if (a.is_tabulated() || b.is_tabulated()) return false;
    return a.symbolic() == b.symbolic();
  }

 private:
  explicit RateFunction(std::variant<Symbolic, StepTable> f) : form_(std::move(f)) {}
  std::variant<Symbolic, StepTable> form_;
};

namespace detail {

struct TailSum {
  double value = 0.0;
  double tail_bound = 0.0;
  bool converges = true;
};

/// Sum over k >= 1 of the tail.
inline TailSum sum_tail(const Tail& t) {
  switch (t.kind) {
    case Tail::Kind::zero: return {};
    case Tail::Kind::geometric: return {t.scale * t.param / (1.0 - t.param), 0.0, true};
    case Tail::Kind::power: {
      const double g = t.param;
      if (g <= 1.0) return {std::numeric_limits<double>::infinity(), 0.0, false};
      // partial sum to N, Euler-Maclaurin for the rest; the integral from N
      // bounds the omitted part from above
      const long N = 10000;
      double s = 0.0;
      for (long k = N; k >= 1; --k) s += std::pow(static_cast<double>(k), -g);
      const double n = static_cast<double>(N);
      double rest = std::pow(n, 1.0 - g) / (g - 1.0) - std::pow(n, -g) / 2.0 +
                    g * std::pow(n, -g - 1.0) / 12.0;
      return {t.scale * (s + rest), t.scale * std::pow(n, 1.0 - g) / (g - 1.0), true};
    }
  }
  return {};
}

}  // namespace detail

inline Summation summate(const RateFunction& phi) {
  Summation out;
  if (phi.is_tabulated()) {
    out.Phi = phi.table().total();
    out.tail_bound = 0.0;
    out.tail_observed = false;
    return out;
  }
  const auto& s = phi.symbolic();
  auto b = detail::sum_tail(s.back);
  auto f = detail::sum_tail(s.fwd);
  out.converges = b.converges && f.converges;
  out.Phi = out.converges ? phi(0) + b.value + f.value : std::numeric_limits<double>::infinity();
  out.tail_bound = b.tail_bound + f.tail_bound;
  return out;
}

inline std::string RateFunction::describe() const {
  if (is_tabulated()) {
    return "table[" + std::to_string(table().first()) + "," + std::to_string(table().last()) + "]";
  }
  auto tail = [](const Tail& t) -> std::string {
    switch (t.kind) {
      case Tail::Kind::zero: return "0";
      case Tail::Kind::geometric: return std::to_string(t.scale) + "*" + std::to_string(t.param) + "^|k|";
      case Tail::Kind::power: return std::to_string(t.scale) + "*|k|^-" + std::to_string(t.param);
    }
    return "?";
  };
  return "back{" + tail(symbolic().back) + "} fwd{" + tail(symbolic().fwd) + "}";
}

/// Smallest majorant that is monotone on each side: sup over i <= k for
/// k < 0, sup over i >= k for k >= 0. Symbolic rates are already monotone
/// and come back unchanged.
inline RateFunction monotone_envelope(const RateFunction& phi) {
  if (!phi.is_tabulated()) return phi;
  const StepTable& t = phi.table();
  if (t.empty()) return phi;

  struct Run {
    long a, b;
    double v;
  };
  std::vector<Run> runs;
  runs.reserve(t.runs() + 1);
  for (std::size_t j = 0; j < t.runs(); ++j) {
    long a = t.run_start(j), b = t.run_end(j);
    double v = t.run_value(j);
    if (a < 0 && b >= 0) {
      runs.push_back({a, -1, v});
      runs.push_back({0, b, v});
    } else {
      runs.push_back({a, b, v});
    }
  }
  double m = 0.0;
  for (auto& r : runs) {
    if (r.a >= 0) break;
    m = std::max(m, r.v);
    r.v = m;
  }
  m = 0.0;
  for (auto it = runs.rbegin(); it != runs.rend() && it->a >= 0; ++it) {
    m = std::max(m, it->v);
    it->v = m;
  }
  StepTable out;
  out.set_window(t.first(), t.last());
  for (const auto& r : runs) out.append(r.a, r.v);
  return RateFunction::tabulated(std::move(out));
}

/// Block positions of the sparse example: p_1 = 0, p_k = p_{k-1} + k.
inline long sparse_block_position(long k) { return k * (k + 1) / 2 - 1; }

/// Even, summable rate whose monotone envelope is not summable:
/// phi(0) = 1 and phi(+-p_k) = k^{-2} for k = 2..max_k, zero elsewhere, so
/// each k^{-2} sits after k-1 zeros. Window is [-p_max, p_max].
inline RateFunction sparse_rate_example(long max_k) {
  if (max_k < 1) throw usage_error("max_k must be >= 1");
  const long P = sparse_block_position(max_k);
  std::vector<std::pair<long, double>> pts;
  pts.reserve(static_cast<std::size_t>(2 * max_k));
  for (long k = max_k; k >= 2; --k) pts.emplace_back(-sparse_block_position(k), 1.0 / (double(k) * double(k)));
  pts.emplace_back(0, 1.0);
  for (long k = 2; k <= max_k; ++k) pts.emplace_back(sparse_block_position(k), 1.0 / (double(k) * double(k)));
  return RateFunction::tabulated(StepTable::from_points(-P, P, pts));
}

}  // namespace glueshadow
