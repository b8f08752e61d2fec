#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "glueshadow/rate.hpp"

using namespace glueshadow;

TEST(StepTable, DenseLookupAndSums) {
  auto t = StepTable::from_dense(-2, {1, 1, 2, 3, 3});
  EXPECT_EQ(t.runs(), 3u);
  EXPECT_EQ(t(-2), 1);
  EXPECT_EQ(t(0), 2);
  EXPECT_EQ(t(2), 3);
  EXPECT_EQ(t(3), 0);
  EXPECT_EQ(t(-3), 0);
  EXPECT_DOUBLE_EQ(t.total(), 10);
  EXPECT_DOUBLE_EQ(t.partial_sum(-1, 1), 6);
}

TEST(StepTable, FromPoints) {
  auto t = StepTable::from_points(-10, 10, {{-5, 0.5}, {0, 1}, {7, 2}});
  EXPECT_EQ(t(-5), 0.5);
  EXPECT_EQ(t(-4), 0);
  EXPECT_EQ(t(7), 2);
  EXPECT_EQ(t(10), 0);
  EXPECT_DOUBLE_EQ(t.total(), 3.5);
  EXPECT_THROW(StepTable::from_points(0, 3, {{5, 1}}), usage_error);
}

TEST(Rate, ExpTwoSidedValues) {
  auto phi = RateFunction::exp_two_sided(1, 2, 0.5);
  EXPECT_DOUBLE_EQ(phi(0), 1);
  EXPECT_DOUBLE_EQ(phi(3), 0.125);
  EXPECT_DOUBLE_EQ(phi(-3), 0.125);
  auto one = RateFunction::exp_two_sided(1, std::numeric_limits<double>::infinity(), 0.5);
  EXPECT_DOUBLE_EQ(one(1), 0);
  EXPECT_DOUBLE_EQ(one(-1), 0.5);
}

TEST(Rate, ExpTwoSidedValidation) {
  EXPECT_THROW(RateFunction::exp_two_sided(1, 1.0, 0.5), usage_error);
  EXPECT_THROW(RateFunction::exp_two_sided(1, 2, 1.0), usage_error);
  EXPECT_THROW(RateFunction::exp_two_sided(-1, 2, 0.5), usage_error);
  EXPECT_THROW(RateFunction::tabulated(StepTable::from_dense(0, {1, -1})), usage_error);
}

TEST(Summate, GeometricSeries) {
  EXPECT_DOUBLE_EQ(summate(RateFunction::exp_two_sided(1, 2, 0.5)).Phi, 3.0);
  EXPECT_DOUBLE_EQ(summate(RateFunction::exp_two_sided(1, std::numeric_limits<double>::infinity(), 0.5)).Phi, 2.0);
  EXPECT_DOUBLE_EQ(summate(RateFunction::zero()).Phi, 0.0);
}

TEST(Summate, PowerTailMatchesZeta) {
  auto phi = RateFunction::power_one_sided(1, 2, Side::negative);
  // 1 + zeta(2)
  EXPECT_NEAR(summate(phi).Phi, 1 + std::numbers::pi * std::numbers::pi / 6, 1e-10);
  auto both = RateFunction::power_one_sided(1, 3, Side::both);
  EXPECT_NEAR(summate(both).Phi, 1 + 2 * 1.2020569031595942, 1e-10);
}

TEST(Summate, DivergentPowerTail) {
  auto phi = RateFunction::power_one_sided(1, 1.0, Side::positive);
  auto s = summate(phi);
  EXPECT_FALSE(s.converges);
  EXPECT_TRUE(std::isinf(s.Phi));
}

TEST(Envelope, MonotoneTableUnchanged) {
  auto t = StepTable::from_dense(-3, {0.125, 0.25, 0.5, 1, 0.5, 0.25, 0.125});
  auto env = monotone_envelope(RateFunction::tabulated(t));
  for (long k = -3; k <= 3; ++k) EXPECT_DOUBLE_EQ(env(k), t(k));
}

TEST(Envelope, DominatesAndIsMonotoneOnRandomTables) {
  gen::Source g(19);
  for (int rep = 0; rep < 200; ++rep) {
    long first = g.integer(-20, 0);
    auto vals = g.reals(static_cast<std::size_t>(g.integer(1, 40)), 0, 1);
    for (auto& v : vals) {
      if (g.unit() < 0.5) v = 0;
    }
    auto phi = RateFunction::tabulated(StepTable::from_dense(first, vals));
    auto env = monotone_envelope(phi);
    long last = first + static_cast<long>(vals.size()) - 1;
    for (long k = first; k <= last; ++k) {
      EXPECT_GE(env(k), phi(k));
      // sup over the tail toward +-infinity, computed directly
      double sup = 0;
      if (k < 0) {
        for (long i = first; i <= k; ++i) sup = std::max(sup, phi(i));
      } else {
        for (long i = k; i <= last; ++i) sup = std::max(sup, phi(i));
      }
      EXPECT_DOUBLE_EQ(env(k), sup);
    }
  }
}

TEST(Envelope, SymbolicRateUnchanged) {
  auto phi = RateFunction::exp_two_sided(2, 3, 0.25);
  EXPECT_EQ(monotone_envelope(phi), phi);
}

TEST(Sparse, BlockPositions) {
  EXPECT_EQ(sparse_block_position(1), 0);
  EXPECT_EQ(sparse_block_position(2), 2);
  EXPECT_EQ(sparse_block_position(3), 5);
}

TEST(Sparse, DisplayedPattern) {
  // ... 3^-2 0 0 2^-2 0 1 0 2^-2 0 0 3^-2 ...
  auto phi = sparse_rate_example(10);
  EXPECT_EQ(phi(0), 1);
  EXPECT_EQ(phi(1), 0);
  EXPECT_EQ(phi(2), 0.25);
  EXPECT_EQ(phi(-2), 0.25);
  EXPECT_EQ(phi(3), 0);
  EXPECT_EQ(phi(4), 0);
  EXPECT_DOUBLE_EQ(phi(5), 1.0 / 9);
  EXPECT_DOUBLE_EQ(phi(-5), 1.0 / 9);
}

TEST(Sparse, TotalIsPiSquaredOverThreeMinusOne) {
  // phi(0) = 1 plus 2 * sum_{k>=2} k^-2 = 1 + 2 (zeta(2) - 1)
  const long m = 1000000;
  auto s = summate(sparse_rate_example(m)).Phi;
  double tail = 2.0 / static_cast<double>(m);  // 2 * sum_{k>m} k^-2 ~ 2/m
  EXPECT_NEAR(s + tail, std::numbers::pi * std::numbers::pi / 3 - 1, 1e-11);
}

TEST(Sparse, EnvelopePartialSumsAreHarmonic) {
  const long m = 300;
  auto env = monotone_envelope(sparse_rate_example(m));
  double h = 1;
  for (long j = 2; j <= m; ++j) {
    h += 1.0 / static_cast<double>(j);
    long p = sparse_block_position(j);
    EXPECT_NEAR(env.table().partial_sum(-p, p), 1 + 2 * (h - 1), 1e-10);
  }
  EXPECT_GT(env.table().total(), 10);
}
