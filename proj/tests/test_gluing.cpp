#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "glueshadow/gluing.hpp"

using namespace glueshadow;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

GluingReport doubling_report(double x0, double y0, std::size_t steps) {
  PiecewiseLinearMap m(2, 2, 0.5);
  std::vector<int> left{0};
  auto x = backward_orbit(m, State::interval(x0), steps, left);
  auto y = forward_orbit(m, State::interval(y0), 20);
  return glue(m, x, y);
}

}  // namespace

TEST(Glue, AffineClosedForm) {
  HyperbolicAffine2D m(2, 0.5, {1, 0}, {0, 1});
  std::vector<int> path{0};
  auto x = backward_orbit(m, State::plane(0, 0), 20, path);
  auto y = forward_orbit(m, State::plane(1, 1), 20);
  auto r = glue(m, x, y);
  EXPECT_NEAR(r.z[0][0], 1, 1e-15);
  EXPECT_NEAR(r.z[0][1], 0, 1e-15);
  for (long k = 0; k < 20; ++k) EXPECT_NEAR(r.error(k), std::pow(2.0, -k), 1e-15);
  for (long k = -1; k >= -20; --k) EXPECT_NEAR(r.error(k), std::pow(2.0, k), 1e-15);
  EXPECT_LE(verify_trajectory(m, r.z), 1e-12);
}

TEST(Glue, DoublingMapBackErrorsHalve) {
  auto r = doubling_report(0.3, 0.4, 40);
  for (long k = 1; k <= 40; ++k) EXPECT_NEAR(r.error(-k), 0.1 * std::pow(2.0, -k), 1e-15);
  for (double e : r.fwd_errors) EXPECT_EQ(e, 0.0);
  EXPECT_DOUBLE_EQ(r.anchor_distance, 0.1);
}

TEST(Glue, TrajectoryWithItselfIsUnchanged) {
  NeutralMap m(0.5, 0.5);
  auto w = forward_orbit(m, State::interval(0.123), 41);
  auto s = shift(w, 20);
  auto r = glue(m, backward_part(s), forward_part(s));
  for (long k = r.first_index(); k <= r.last_index(); ++k) EXPECT_LE(r.error(k), 1e-12);
}

TEST(Glue, InputValidation) {
  PiecewiseLinearMap m(2, 2, 0.5);
  auto f = forward_orbit(m, State::interval(0.2), 5);
  EXPECT_THROW(glue(m, f, f), usage_error);  // x must end at index 0
  TorusLinearMap t({2, 1, 1, 1});
  auto tf = forward_orbit(t, State::torus(0.1, 0.1), 3);
  EXPECT_THROW(glue(m, backward_part(shift(f, 2)), tf), usage_error);
}

TEST(Glue, StrictPolicyThrowsWhenBranchMissesTarget) {
  PiecewiseLinearMap m(1.8, 2, 0.5);
  std::vector<int> left{0};
  auto x = backward_orbit(m, State::interval(0.0), 10, left);
  auto y = forward_orbit(m, State::interval(1.0), 5);
  try {
    glue(m, x, y);
    FAIL() << "expected gluing_failure";
  } catch (const gluing_failure& e) {
    EXPECT_EQ(e.index(), -1);
  }
  GlueOptions fb;
  fb.policy = BranchPolicy::fallback;
  auto r = glue(m, x, y, fb);
  EXPECT_EQ(r.branch_fallbacks, 10u);
  for (long k = -1; k >= -10; --k) EXPECT_DOUBLE_EQ(r.error(k), 1.0);
}

TEST(Verify, DoublingAgainstOneSidedRate) {
  auto r = doubling_report(0.3, 0.4, 40);
  auto phi = RateFunction::exp_two_sided(1, kInf, 0.5);
  EXPECT_TRUE(verify_gluing(r, phi, GluingMode::strong));
  EXPECT_FALSE(verify_gluing(r, RateFunction::zero(), GluingMode::weak));
}

TEST(Verify, StrongImpliesWeakForSmallAnchors) {
  gen::Source g(2);
  auto phi = RateFunction::exp_two_sided(1, kInf, 0.5);
  for (int i = 0; i < 100; ++i) {
    auto r = doubling_report(g.range(0, 0.49), g.range(0, 1), 30);
    if (verify_gluing(r, phi, GluingMode::strong)) EXPECT_TRUE(verify_gluing(r, phi, GluingMode::weak));
  }
}

TEST(Verify, TableMustCoverWindow) {
  auto r = doubling_report(0.3, 0.4, 10);
  auto t = RateFunction::tabulated(StepTable::from_dense(-5, std::vector<double>(6, 1.0)));
  EXPECT_THROW(verify_gluing(r, t, GluingMode::weak), usage_error);
}

TEST(Verify, NeutralStrongFailsWeakHolds) {
  NeutralMap m(0.5, 0.5);
  std::vector<int> left{0};
  auto x = backward_orbit(m, State::interval(0.0), 100, left);
  auto y = forward_orbit(m, State::interval(1e-6), 5);
  auto r = glue(m, x, y);
  // near the neutral point z barely moves backward, so the error at -100
  // stays comparable to the anchor itself
  EXPECT_GT(r.error(-100), 0.5e-6);
  auto table = RateFunction::tabulated(StepTable::from_dense(-100, std::vector<double>(105, 2e-4)));
  EXPECT_LE(r.error(-100), 2e-4);
  EXPECT_FALSE(verify_gluing(r, table, GluingMode::strong));
  EXPECT_TRUE(verify_gluing(r, table, GluingMode::weak));
}

TEST(Fit, GeometricData) {
  auto r = doubling_report(0.3, 0.4, 40);
  auto d = fit_rate_detail(r);
  ASSERT_TRUE(d.back);
  EXPECT_TRUE(d.back->geometric);
  EXPECT_NEAR(1.0 / d.back->param, 2.0, 0.02);
  EXPECT_FALSE(d.fwd);
  auto phi = fit_rate(r);
  EXPECT_TRUE(verify_gluing(r, phi, GluingMode::weak));
}

TEST(Fit, PowerData) {
  std::vector<std::pair<long, double>> data;
  for (long k = 1; k <= 4096; ++k) data.emplace_back(k, std::pow(static_cast<double>(k), -2.0));
  auto f = detail::fit_side(data);
  ASSERT_TRUE(f);
  EXPECT_FALSE(f->geometric);
  EXPECT_NEAR(f->param, 2.0, 0.04);
}

TEST(Fit, ZeroErrorsGiveZeroRate) {
  PiecewiseLinearMap m(2, 2, 0.5);
  auto w = forward_orbit(m, State::interval(0.2), 30);
  auto s = shift(w, 15);
  auto r = glue(m, backward_part(s), forward_part(s));
  EXPECT_EQ(fit_rate(r), RateFunction::zero());
}

TEST(Fit, TooFewPointsIsUsageError) {
  std::vector<std::pair<long, double>> data{{1, 0.5}, {2, 0.25}};
  EXPECT_THROW(detail::fit_side(data), usage_error);
}

TEST(Rates, HyperbolicRateMatchesEigenvalues) {
  HyperbolicAffine2D m(2, 0.5, {1, 0}, {0, 1});
  auto phi = hyperbolic_rate(m);
  EXPECT_EQ(phi, RateFunction::exp_two_sided(1, 2, 0.5));
}

TEST(Rates, PiecewiseLinearRate) {
  EXPECT_EQ(piecewise_linear_rate(PiecewiseLinearMap(2, 2, 0.5)), RateFunction::exp_two_sided(1, kInf, 0.5));
  EXPECT_THROW(piecewise_linear_rate(PiecewiseLinearMap(1.8, 2, 0.5)), usage_error);
  EXPECT_THROW(piecewise_linear_rate(PiecewiseLinearMap(1, 2, 0.5)), usage_error);
}

TEST(Rates, NeutralWeakRateIsSummablePower) {
  auto phi = neutral_weak_rate(NeutralMap(0.5, 0.5));
  ASSERT_FALSE(phi.is_tabulated());
  EXPECT_EQ(phi.symbolic().back.kind, Tail::Kind::power);
  EXPECT_GT(phi.symbolic().back.param, 1.0);
  EXPECT_TRUE(summate(phi).converges);
}

TEST(Rates, NeutralAlphaOneStaysPowerLaw) {
  // along the all-left path the decay is polynomial even at alpha = 1
  auto phi = neutral_weak_rate(NeutralMap(1.0, 0.5));
  EXPECT_EQ(phi.symbolic().back.kind, Tail::Kind::power);
  EXPECT_NEAR(phi.symbolic().back.param, 1.0, 0.1);
}

// Property: strong gluing with the hyperbolic rate for random affine pairs.
TEST(Property, AffineStrongGluing) {
  gen::Source g(101);
  for (int rep = 0; rep < 100; ++rep) {
    double th1 = g.range(0, 3.14159), th2 = th1 + g.range(0.3, 2.8);
    Vec2 e1{std::cos(th1), std::sin(th1)}, e2{std::cos(th2), std::sin(th2)};
    HyperbolicAffine2D m(g.range(1.5, 3), g.range(0.3, 0.7), e1, e2, {g.range(-1, 1), g.range(-1, 1)});
    std::vector<int> path{0};
    Vec2 f = m.fixed_point();
    auto x = backward_orbit(m, State::plane(f[0] + g.range(-1, 1), f[1] + g.range(-1, 1)), 12, path);
    auto y = forward_orbit(m, State::plane(f[0] + g.range(-1, 1), f[1] + g.range(-1, 1)), 12);
    GlueOptions opt;
    opt.rate = hyperbolic_rate(m);
    auto r = glue(m, x, y, opt);
    EXPECT_TRUE(r.strong_ok);
    EXPECT_LE(verify_trajectory(m, r.z), 1e-11 * (1 + norm(x[-12].coords())));
  }
}

TEST(Property, FullBranchStrongGluing) {
  gen::Source g(55);
  for (int rep = 0; rep < 100; ++rep) {
    double c = g.range(0.2, 0.8);
    PiecewiseLinearMap m(1 / c, 1 / (1 - c), c);
    std::vector<int> path;
    for (int i = 0; i < 7; ++i) path.push_back(static_cast<int>(g.integer(0, 1)));
    auto x = backward_orbit(m, State::interval(g.unit()), 30, path);
    auto y = forward_orbit(m, State::interval(g.unit()), 30);
    GlueOptions opt;
    opt.rate = piecewise_linear_rate(m);
    auto r = glue(m, x, y, opt);
    EXPECT_TRUE(r.strong_ok);
    for (double e : r.fwd_errors) EXPECT_EQ(e, 0.0);
    EXPECT_LE(verify_trajectory(m, r.z), 1e-11);
  }
}

TEST(Property, NeutralGlueIsTrajectory) {
  gen::Source g(8);
  NeutralMap m(0.5, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> path{static_cast<int>(g.integer(0, 1)), static_cast<int>(g.integer(0, 1))};
    auto x = backward_orbit(m, State::interval(g.unit()), 40, path);
    auto y = forward_orbit(m, State::interval(g.unit()), 40);
    auto r = glue(m, x, y);
    EXPECT_LE(verify_trajectory(m, r.z), 1e-11);
  }
}

TEST(Property, TorusLocalGluing) {
  gen::Source g(13);
  TorusLinearMap m({2, 1, 1, 1});
  std::vector<int> path{0};
  for (int rep = 0; rep < 50; ++rep) {
    auto x0 = State::torus(g.unit(), g.unit());
    auto y0 = State::torus(x0[0] + g.range(-0.1, 0.1), x0[1] + g.range(-0.1, 0.1));
    auto x = backward_orbit(m, x0, 15, path);
    auto y = forward_orbit(m, y0, 15);
    GlueOptions opt;
    opt.rate = hyperbolic_rate(m);
    auto r = glue(m, x, y, opt);
    EXPECT_TRUE(r.strong_ok);
    EXPECT_LE(verify_trajectory(m, r.z), 1e-9);
  }
  EXPECT_THROW(glue(m, backward_orbit(m, State::torus(0, 0), 3, path), forward_orbit(m, State::torus(0.5, 0.5), 3)),
               gluing_failure);
}

TEST(Property, ShiftCovariance) {
  PiecewiseLinearMap m(2, 2, 0.5);
  std::vector<int> path{0, 1, 1};
  auto x = backward_orbit(m, State::interval(0.37), 30, path);
  std::vector<State> xs = x.points();
  for (int i = 0; i < 10; ++i) xs.push_back(m.forward(xs.back()));
  TrajectoryWindow X(xs, 30);
  auto y0 = forward_orbit(m, State::interval(0.81), 41);
  TrajectoryWindow Y(y0.points(), 30);
  auto a = glue_at(m, X, Y, 4);
  auto b = glue(m, backward_part(shift(X, 4)), forward_part(shift(Y, 4)));
  EXPECT_EQ(shift(a.z, 4), b.z);
}
