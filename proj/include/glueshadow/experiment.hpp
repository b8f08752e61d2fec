#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "glueshadow/csv.hpp"
#include "glueshadow/glueshadow.hpp"

namespace glueshadow::experiment {

/// Thrown for malformed or invalid configs; carries the offending line.
class config_error : public usage_error {
 public:
  config_error(const std::string& source, int line, const std::string& msg)
      : usage_error(source + (line > 0 ? ":" + std::to_string(line) : "") + ": " + msg) {}
};

enum ExitCode { kPass = 0, kBoundFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

/// Flat `key = value` config. Keys are `block.key` or top-level; `#` starts
/// a comment; blank lines are ignored.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source);

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error(path, 0, "cannot open config");
    return parse(f, path);
  }

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  int line(const std::string& key) const { return has(key) ? values_.at(key).line : 0; }

  std::string str(const std::string& key, const std::optional<std::string>& def = std::nullopt) const {
    if (auto it = values_.find(key); it != values_.end()) return it->second.text;
    if (def) return *def;
    throw config_error(source_, 0, "missing required key " + key);
  }
  double num(const std::string& key, std::optional<double> def = std::nullopt) const;
  long integer(const std::string& key, std::optional<long> def = std::nullopt) const;
  std::uint64_t u64(const std::string& key) const;
  std::vector<double> list(const std::string& key, const std::optional<std::vector<double>>& def = std::nullopt) const;

  void set(const std::string& key, const std::string& value) { values_[key] = {value, 0}; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw config_error(source_, line(key), key + ": " + msg);
  }

 private:
  struct Entry {
    std::string text;
    int line = 0;
  };
  std::string source_;
  std::map<std::string, Entry> values_;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "task",
      "map.kind", "map.a", "map.b", "map.c", "map.alpha", "map.lambda1", "map.lambda2", "map.e1", "map.e2",
      "map.offset", "map.matrix",
      "perturbation.kind", "perturbation.epsilon", "perturbation.D", "perturbation.neg_len",
      "perturbation.pos_len", "perturbation.seed", "perturbation.start",
      "shadow.method", "shadow.beta",
      "glue.x0", "glue.y0", "glue.back", "glue.fwd", "glue.branch_path", "glue.policy", "glue.mode",
      "rates.window", "rates.fit_window",
      "lemmas.R", "lemmas.alphas", "lemmas.n_max", "lemmas.v", "lemmas.grid",
      "envelope.max_k",
      "tolerance.gap_threshold", "tolerance.torus_eps0", "tolerance.bound_margin",
  };
  return keys;
}

inline Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string raw;
  int lineno = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(source, lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(source, lineno, "empty key");
    if (value.empty()) throw config_error(source, lineno, "empty value for " + key);
    if (!known_keys().count(key)) throw config_error(source, lineno, "unknown key " + key);
    if (c.values_.count(key)) throw config_error(source, lineno, "duplicate key " + key);
    c.values_[key] = {value, lineno};
  }
  return c;
}

inline double Config::num(const std::string& key, std::optional<double> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw config_error(source_, 0, "missing required key " + key);
  }
  const std::string& t = values_.at(key).text;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    fail(key, "not a number: " + t);
  }
  if (used != t.size()) fail(key, "not a number: " + t);
  return v;
}

inline long Config::integer(const std::string& key, std::optional<long> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw config_error(source_, 0, "missing required key " + key);
  }
  const std::string& t = values_.at(key).text;
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    fail(key, "not an integer: " + t);
  }
  if (used != t.size()) fail(key, "not an integer: " + t);
  return v;
}

inline std::uint64_t Config::u64(const std::string& key) const {
  const std::string t = str(key);
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!t.empty() && t[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(t, &used);
  } catch (const std::exception&) {
    fail(key, "not an unsigned integer: " + t);
  }
  if (used != t.size()) fail(key, "not an unsigned integer: " + t);
  return v;
}

inline std::vector<double> Config::list(const std::string& key,
                                        const std::optional<std::vector<double>>& def) const {
  if (!has(key)) {
    if (def) return *def;
    throw config_error(source_, 0, "missing required key " + key);
  }
  std::istringstream ss(values_.at(key).text);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail(key, "not a number: " + tok);
    }
    if (used != tok.size()) fail(key, "not a number: " + tok);
    out.push_back(v);
  }
  if (out.empty()) fail(key, "empty list");
  return out;
}

// --- config -> objects ------------------------------------------------------------

inline Vec2 vec2(const Config& c, const std::string& key, std::optional<Vec2> def = std::nullopt) {
  if (!c.has(key) && def) return *def;
  auto v = c.list(key);
  if (v.size() != 2) c.fail(key, "expected two numbers");
  return {v[0], v[1]};
}

inline AnyMap build_map(const Config& c) {
  const std::string kind = c.str("map.kind");
  try {
    if (kind == "plin") return PiecewiseLinearMap(c.num("map.a", 2.0), c.num("map.b", 2.0), c.num("map.c", 0.5));
    if (kind == "neutral") return NeutralMap(c.num("map.alpha", 0.5), c.num("map.c", 0.5));
    if (kind == "affine") {
      return HyperbolicAffine2D(c.num("map.lambda1", 2.0), c.num("map.lambda2", 0.5), vec2(c, "map.e1", Vec2{1, 0}),
                                vec2(c, "map.e2", Vec2{0, 1}), vec2(c, "map.offset", Vec2{0, 0}));
    }
    if (kind == "torus") {
      auto m = c.list("map.matrix", std::vector<double>{2, 1, 1, 1});
      if (m.size() != 4) c.fail("map.matrix", "expected four integers");
      std::array<long, 4> a{};
      for (std::size_t i = 0; i < 4; ++i) {
        if (m[i] != std::floor(m[i])) c.fail("map.matrix", "entries must be integers");
        a[i] = static_cast<long>(m[i]);
      }
      return TorusLinearMap(a);
    }
  } catch (const config_error&) {
    throw;
  } catch (const usage_error& e) {
    c.fail("map.kind", e.what());
  }
  c.fail("map.kind", "unknown map kind " + kind + " (plin, neutral, affine, torus)");
}

inline PseudoKind pseudo_kind(const Config& c) {
  const std::string k = c.str("perturbation.kind", "R");
  if (k == "U") return PseudoKind::U;
  if (k == "A") return PseudoKind::A;
  if (k == "R") return PseudoKind::R;
  c.fail("perturbation.kind", "expected U, A or R");
}

inline ShadowKind shadow_kind(const Config& c, PseudoKind alpha) {
  const std::string def = alpha == PseudoKind::U ? "U" : "A";
  const std::string k = c.str("shadow.beta", def);
  if (k == "U") return ShadowKind::U;
  if (k == "A") return ShadowKind::A;
  if (k == "L") return ShadowKind::L;
  c.fail("shadow.beta", "expected U, A or L");
}

inline std::size_t nonneg(const Config& c, const std::string& key, long def) {
  long v = c.integer(key, def);
  if (v < 0) c.fail(key, "must be >= 0");
  return static_cast<std::size_t>(v);
}

inline PerturbationSpec perturbation(const Config& c, Space space) {
  PerturbationSpec s;
  s.kind = pseudo_kind(c);
  s.epsilon = c.num("perturbation.epsilon", 0.01);
  s.D = c.num("perturbation.D", s.kind == PseudoKind::U ? s.epsilon : 1.0);
  if (space == Space::torus && !c.has("perturbation.D") && s.kind != PseudoKind::U) s.D = 0.25;
  if (space == Space::plane && !c.has("perturbation.D") && s.kind != PseudoKind::U) s.D = 1.0;
  s.neg_len = nonneg(c, "perturbation.neg_len", 0);
  s.pos_len = nonneg(c, "perturbation.pos_len", 1000);
  if (!c.has("perturbation.seed")) c.fail("perturbation.seed", "stochastic task needs a seed");
  s.seed = c.u64("perturbation.seed");
  if (c.has("perturbation.start")) {
    auto v = c.list("perturbation.start");
    if (v.size() != static_cast<std::size_t>(dimension(space))) c.fail("perturbation.start", "wrong dimension");
    s.start = Vec2{v[0], v.size() > 1 ? v[1] : 0.0};
  }
  try {
    validate(s, space);
  } catch (const usage_error& e) {
    c.fail("perturbation.kind", e.what());
  }
  return s;
}

inline State state_from(const Config& c, const std::string& key, Space space) {
  auto v = c.list(key);
  if (v.size() != static_cast<std::size_t>(dimension(space))) c.fail(key, "wrong dimension for the map");
  try {
    return State::in(space, {v[0], v.size() > 1 ? v[1] : 0.0});
  } catch (const domain_error& e) {
    c.fail(key, e.what());
  }
}

template <class M>
RateFunction rate_for(const M& map, const Config& c) {
  if constexpr (std::same_as<M, NeutralMap>) return neutral_weak_rate(map, c.integer("rates.fit_window", 4096));
  else return gluing_rate(map);
}

// --- output helpers ---------------------------------------------------------------

inline std::vector<std::string> summary_header() {
  return {"task", "map", "epsilon", "D", "seed", "window", "uniform_err", "Q_limsup", "limit_err", "K_emp", "bound",
          "pass"};
}

struct SummaryRow {
  std::string task, map, epsilon, D, seed, window, uniform_err, Q_limsup, limit_err, K_emp, bound, pass;
  std::vector<std::string> cells() const {
    return {task, map, epsilon, D, seed, window, uniform_err, Q_limsup, limit_err, K_emp, bound, pass};
  }
};

inline std::string verdict(bool ok) { return ok ? "true" : "false"; }

inline std::vector<std::string> state_cells(const State& s) {
  if (s.dim() == 1) return {csv::number(s[0])};
  return {csv::number(s[0]), csv::number(s[1])};
}

inline std::vector<std::string> state_header(const std::string& name, Space sp) {
  if (dimension(sp) == 1) return {name};
  return {name + "0", name + "1"};
}

template <class... Parts>
std::vector<std::string> join(const Parts&... parts) {
  std::vector<std::string> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

struct RunResult {
  int exit_code = kPass;
  SummaryRow summary;
};

// --- tasks ------------------------------------------------------------------------

namespace detail {

template <class M>
RunResult run_glue(const M& map, const Config& c, const std::filesystem::path& out) {
  const Space sp = map.space();
  const long back = c.integer("glue.back", 40), fwd = c.integer("glue.fwd", 40);
  if (back < 1 || fwd < 1) c.fail("glue.back", "glue.back and glue.fwd must be >= 1");
  std::vector<int> path;
  for (double b : c.list("glue.branch_path", std::vector<double>{0})) {
    if (b != std::floor(b) || b < 0 || b >= map.branch_count()) c.fail("glue.branch_path", "invalid branch");
    path.push_back(static_cast<int>(b));
  }
  GlueOptions opt;
  const std::string policy = c.str("glue.policy", "strict");
  if (policy == "fallback") opt.policy = BranchPolicy::fallback;
  else if (policy != "strict") c.fail("glue.policy", "expected strict or fallback");
  opt.torus_eps0 = c.num("tolerance.torus_eps0", opt.torus_eps0);
  const std::string mode = c.str("glue.mode", std::same_as<M, NeutralMap> ? "weak" : "strong");
  if (mode != "strong" && mode != "weak") c.fail("glue.mode", "expected strong or weak");

  const State x0 = state_from(c, "glue.x0", sp);
  const State y0 = state_from(c, "glue.y0", sp);
  auto x = backward_orbit(map, x0, static_cast<std::size_t>(back), path);
  auto y = forward_orbit(map, y0, static_cast<std::size_t>(fwd));
  const RateFunction phi = rate_for(map, c);
  opt.rate = phi;

  RunResult res;
  res.summary.task = "glue";
  res.summary.window = csv::number(back + fwd);
  GluingReport r = glue(map, x, y, opt);
  csv::Writer w((out / "glue.csv").string(), {"k", "error", "bound_strong", "bound_weak"});
  double worst = 0.0;
  for (long k = r.first_index(); k <= r.last_index(); ++k) {
    worst = std::max(worst, r.error(k));
    w.row({csv::number(k), csv::number(r.error(k)), csv::number(phi(k) * r.anchor_distance), csv::number(phi(k))});
  }
  const bool ok = mode == "strong" ? r.strong_ok : r.weak_ok;
  res.summary.uniform_err = csv::number(worst);
  res.summary.bound = mode;
  res.summary.pass = verdict(ok);
  res.exit_code = ok ? kPass : kBoundFailure;
  return res;
}

template <class M>
RunResult run_shadow(const M& map, const Config& c, const std::filesystem::path& out) {
  const Space sp = map.space();
  PerturbationSpec spec = perturbation(c, sp);
  const double thr = c.num("tolerance.gap_threshold", kDefaultGapThreshold);
  const double margin = c.num("tolerance.bound_margin", 1.0);
  if (!(margin >= 1.0)) c.fail("tolerance.bound_margin", "must be >= 1");
  const ShadowKind beta = shadow_kind(c, spec.kind);
  const std::string method = c.str("shadow.method", "parallel");
  if (method != "parallel" && method != "consecutive") c.fail("shadow.method", "expected parallel or consecutive");

  RunResult res;
  SummaryRow& s = res.summary;
  s.task = "shadow";
  s.epsilon = csv::number(spec.epsilon);
  s.D = csv::number(spec.D);
  s.seed = csv::number(static_cast<std::size_t>(spec.seed));
  s.window = csv::number(spec.neg_len + spec.pos_len);

  auto gen = generate_pseudo(map, spec, thr);
  const PseudoTrajectory& p = gen.pseudo;
  {
    csv::Writer w((out / "pseudo.csv").string(), join(std::vector<std::string>{"t"}, state_header("y", sp),
                                                     std::vector<std::string>{"gap"}));
    for (long t = p.window.first_index(); t <= p.window.last_index(); ++t) {
      std::string gap = t < p.window.last_index() ? csv::number(p.gap(t)) : "";
      w.row(join(std::vector<std::string>{csv::number(t)}, state_cells(p.window[t]), std::vector<std::string>{gap}));
    }
  }

  // Maps without a summable rate are still glued; they just carry no bound.
  std::optional<RateFunction> phi;
  try {
    phi = rate_for(map, c);
  } catch (const config_error&) {
    throw;
  } catch (const usage_error&) {
  }
  ShadowOptions opt;
  if (phi) opt.rate = *phi;
  opt.D = spec.D;
  opt.glue.torus_eps0 = c.num("tolerance.torus_eps0", opt.glue.torus_eps0);
  ShadowingReport r = method == "parallel" ? parallel_glue(map, p, opt) : consecutive_glue(map, p, opt);

  {
    csv::Writer w((out / "trajectory.csv").string(),
                  join(std::vector<std::string>{"t"}, state_header("y", sp), state_header("z", sp),
                       std::vector<std::string>{"err"}));
    for (long t = r.z.first_index(); t <= r.z.last_index(); ++t) {
      w.row(join(std::vector<std::string>{csv::number(t)}, state_cells(r.y[t]), state_cells(r.z[t]),
                 std::vector<std::string>{csv::number(r.errors[static_cast<std::size_t>(t - r.z.first_index())])}));
    }
  }
  {
    csv::Writer w((out / "qn.csv").string(), {"n", "Qn"});
    for (std::size_t n = 0; n < r.Qn.size(); ++n) w.row({csv::number(n), csv::number(r.Qn[n])});
  }
  {
    csv::Writer w((out / "levels.csv").string(), {"level", "moment_index", "gap", "tau_min", "gap_bound"});
    for (std::size_t n = 0; n < r.levels.size(); ++n) {
      const auto& L = r.levels[n];
      std::string bound = phi && r.checks.gaps ? csv::number(r.checks.gaps->bounds[n]) : "";
      std::string tau = L.tau_min == kUnboundedTau ? "inf" : csv::number(L.tau_min);
      for (std::size_t j = 0; j < L.moments.size(); ++j) {
        w.row({csv::number(L.level), csv::number(L.moments[j]), csv::number(L.gaps[j]), tau, bound});
      }
    }
  }

  // R-type bounds use the observed moment density, U-type the largest gap
  double eps = spec.epsilon;
  if (spec.kind == PseudoKind::R) eps = r.checks.density;
  if (spec.kind == PseudoKind::U) eps = r.checks.eps_uniform;
  ShadowingVerdict v = check_shadowing(spec.kind, beta, eps, r);
  if (!phi) {
    v.bound.reset();
    r.checks.gaps.reset();
  }
  s.uniform_err = csv::number(r.uniform_err);
  s.Q_limsup = csv::number(r.Q_limsup);
  s.limit_err = csv::number(r.limit_err);
  s.K_emp = csv::number(v.K_emp);
  bool ok = true;
  if (v.bound) {
    const double b = *v.bound * margin;
    s.bound = csv::number(b);
    ok = v.delta <= b * (1.0 + 1e-12) + 1e-15;
  }
  if (r.checks.gaps) ok = ok && r.checks.gaps->observed_ok && r.checks.gaps->closing_ok;
  s.pass = v.bound ? verdict(ok) : (ok ? "na" : "false");
  res.exit_code = ok ? kPass : kBoundFailure;
  return res;
}

template <class M>
RunResult run_rates(const M& map, const Config& c, const std::filesystem::path& out) {
  const long K = c.integer("rates.window", 32);
  if (K < 1) c.fail("rates.window", "must be >= 1");
  const RateFunction phi = rate_for(map, c);
  const Summation sum = summate(phi);
  csv::Writer w((out / "rate.csv").string(), {"k", "phi", "partial_sum"});
  double partial = 0.0;
  for (long k = -K; k <= K; ++k) {
    partial += phi(k);
    w.row({csv::number(k), csv::number(phi(k)), csv::number(partial)});
  }
  RunResult res;
  res.summary.task = "rates";
  res.summary.window = csv::number(2 * K + 1);
  res.summary.bound = csv::number(sum.Phi);
  res.summary.pass = verdict(sum.converges);
  res.exit_code = sum.converges ? kPass : kBoundFailure;
  return res;
}

}  // namespace detail

inline RunResult run_lemmas(const Config& c, const std::filesystem::path& out) {
  const double R = c.num("lemmas.R", 1.0);
  const double v0 = c.num("lemmas.v", 1.0);
  const long n_max = c.integer("lemmas.n_max", 10000);
  const long grid = c.integer("lemmas.grid", 100);
  auto alphas = c.list("lemmas.alphas", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  if (!(R > 0)) c.fail("lemmas.R", "must be > 0");
  if (!(v0 > 0 && v0 <= 1)) c.fail("lemmas.v", "must lie in (0,1]");
  if (n_max < 20) c.fail("lemmas.n_max", "must be >= 20");
  if (grid < 1) c.fail("lemmas.grid", "must be >= 1");
  for (double a : alphas) {
    if (!(a >= 0)) c.fail("lemmas.alphas", "alpha must be >= 0");
  }

  bool ok = true;
  // one-step sandwich on a grid of (v, alpha) in (0,1] x (0.1, 2]
  for (long i = 1; i <= grid; ++i) {
    for (long j = 1; j <= grid; ++j) {
      double v = static_cast<double>(i) / static_cast<double>(grid);
      double a = 0.1 + 1.9 * static_cast<double>(j) / static_cast<double>(grid);
      try {
        neutral_one_step_bounds(NeutralBranch(R, a), v);
      } catch (const numerical_failure&) {
        ok = false;
      }
    }
  }

  csv::Writer w((out / "lemmas.csv").string(), {"alpha", "R", "n", "tau_inv_n", "fit_gamma"});
  for (double a : alphas) {
    NeutralBranch nb(R, a);
    auto seq = neutral_inverse_iterates(nb, v0, n_max);
    std::string gamma;
    if (a > 0) {
      auto fit = fit_decay_exponent(seq, n_max / 10, n_max);
      gamma = csv::number(fit.gamma);
      ok = ok && std::abs(fit.gamma - 1.0 / a) <= 0.05 / a;
    } else {
      for (long n = 0; n <= n_max; ++n) {
        double exact = std::pow(1.0 + R, -static_cast<double>(n)) * v0;
        ok = ok && std::abs(seq[static_cast<std::size_t>(n)] - exact) <= 1e-12;
      }
    }
    for (long n = 0; n <= n_max; ++n) {
      w.row({csv::number(a), csv::number(R), csv::number(n), csv::number(seq[static_cast<std::size_t>(n)]), gamma});
    }
  }
  RunResult res;
  res.summary.task = "lemmas";
  res.summary.window = csv::number(n_max);
  res.summary.pass = verdict(ok);
  res.exit_code = ok ? kPass : kBoundFailure;
  return res;
}

inline RunResult run_envelope(const Config& c, const std::filesystem::path& out) {
  const long max_k = c.integer("envelope.max_k", 1000);
  if (max_k < 2) c.fail("envelope.max_k", "must be >= 2");
  const RateFunction phi = sparse_rate_example(max_k);
  const RateFunction env = monotone_envelope(phi);
  csv::Writer wp((out / "envelope_phi.csv").string(), {"k", "phi", "partial_sum"});
  csv::Writer we((out / "envelope_tilde.csv").string(), {"k", "phi", "partial_sum"});
  bool ok = true;
  double harmonic = 1.0, bound = 1.0;
  for (long m = 1; m <= max_k; ++m) {
    const long p = sparse_block_position(m);
    if (m > 1) harmonic += 1.0 / static_cast<double>(m);
    bound = 1.0 + 2.0 * (harmonic - 1.0);
    const double sp = phi.table().partial_sum(-p, p);
    const double se = env.table().partial_sum(-p, p);
    wp.row({csv::number(p), csv::number(phi(p)), csv::number(sp)});
    we.row({csv::number(p), csv::number(env(p)), csv::number(se)});
    ok = ok && se >= bound * (1.0 - 1e-12);
  }
  RunResult res;
  res.summary.task = "envelope";
  res.summary.window = csv::number(2 * sparse_block_position(max_k) + 1);
  res.summary.bound = csv::number(bound);
  res.summary.pass = verdict(ok);
  res.exit_code = ok ? kPass : kBoundFailure;
  return res;
}

/// Runs one experiment and writes its CSVs and summary.csv into `out`.
/// Config problems surface as config_error before any file is written;
/// numerical failures keep whatever was written and add a failing summary.
inline int run(const Config& c, const std::filesystem::path& out, std::ostream& log) {
  const std::string task = c.str("task");
  static const std::set<std::string> tasks{"glue", "shadow", "rates", "lemmas", "envelope"};
  if (!tasks.count(task)) c.fail("task", "unknown task " + task + " (glue, shadow, rates, lemmas, envelope)");

  std::optional<AnyMap> map;
  if (task == "glue" || task == "shadow" || task == "rates") map = build_map(c);

  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw config_error(c.source(), 0, "cannot create output directory " + out.string());

  RunResult res;
  res.summary.task = task;
  if (map) res.summary.map = map_name(*map);
  try {
    if (task == "lemmas") {
      res = run_lemmas(c, out);
    } else if (task == "envelope") {
      res = run_envelope(c, out);
    } else {
      res = std::visit(
          [&](const auto& m) {
            if (task == "glue") return detail::run_glue(m, c, out);
            if (task == "shadow") return detail::run_shadow(m, c, out);
            return detail::run_rates(m, c, out);
          },
          *map);
    }
    if (map) res.summary.map = map_name(*map);
  } catch (const config_error&) {
    throw;
  } catch (const numerical_failure& e) {
    log << "numerical failure: " << e.what() << '\n';
    res.summary.pass = "fail";
    res.exit_code = kNumericalFailure;
  } catch (const domain_error& e) {
    log << "numerical failure: " << e.what() << '\n';
    res.summary.pass = "fail";
    res.exit_code = kNumericalFailure;
  }
  csv::Writer s((out / "summary.csv").string(), summary_header());
  s.row(res.summary.cells());
  return res.exit_code;
}

}  // namespace glueshadow::experiment
