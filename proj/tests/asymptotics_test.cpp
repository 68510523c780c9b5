#include "fbq/asymptotics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fbq/codebook.hpp"
#include "fbq/corelin.hpp"
#include "test_support.hpp"

using namespace fbq;

TEST(OverlapLimitTest, Endpoints) {
  EXPECT_DOUBLE_EQ(overlap_limit(0.0), 0.0);
  EXPECT_DOUBLE_EQ(overlap_limit(1.0), 0.5);
  EXPECT_DOUBLE_EQ(overlap_limit(std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_THROW(overlap_limit(-0.1), std::invalid_argument);
}

TEST(Lemma1ResidualTest, Values) {
  EXPECT_DOUBLE_EQ(lemma1_residual(0.0, 1.7), 1.7);
  EXPECT_DOUBLE_EQ(lemma1_residual(1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(lemma1_residual(std::numeric_limits<double>::infinity(), 3.0), 0.0);
  EXPECT_THROW(lemma1_residual(1.0, -1.0), std::invalid_argument);
}

TEST(ConditionalCdfTest, ShapeAndHandValue) {
  EXPECT_DOUBLE_EQ(conditional_overlap_cdf(0.0, 0.3, 4), 0.0);
  EXPECT_DOUBLE_EQ(conditional_overlap_cdf(0.7, 0.3, 4), 1.0);
  // N=2: F(x) = x / (1 - s1^2); at s1^2 = 0.5, x = 0.25 -> 0.5
  EXPECT_NEAR(conditional_overlap_cdf(0.25, 0.5, 2), 0.5, 1e-12);
  EXPECT_THROW(conditional_overlap_cdf(0.8, 0.3, 4), std::invalid_argument);
  EXPECT_THROW(conditional_overlap_cdf(0.1, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(conditional_overlap_cdf(0.1, 0.3, 1), std::invalid_argument);

  // valid cdf: nondecreasing on a grid
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.7 * i / 100.0;
    const double f = conditional_overlap_cdf(x, 0.3, 8);
    EXPECT_GE(f, prev);
    prev = f;
  }
  EXPECT_NEAR(conditional_overlap_mean(0.3, 4), 0.7 / 4.0, 1e-12);
}

// Monte-Carlo agreement with the conditional cdf at module scale; the
// acceptance suite runs the full-size Kolmogorov-Smirnov version
TEST(ConditionalCdfTest, MonteCarloAgreement) {
  const std::size_t n = 4;
  const double s1sq = 0.3;
  Rng rng(55);
  const CVec u1 = test::random_unit(rng, n);
  // u2: random unit orthogonal to u1
  CVec u2 = test::random_unit(rng, n);
  const cplx proj = inner(u1, u2);
  for (std::size_t i = 0; i < n; ++i) u2[i] -= proj * u1[i];
  u2 = UnitVector::normalized(std::move(u2)).v;

  std::vector<double> samples;
  while (samples.size() < 4000) {
    const CVec v = test::random_unit(rng, n);
    if (std::norm(inner(u1, v)) >= s1sq) samples.push_back(std::norm(inner(u2, v)));
  }
  std::sort(samples.begin(), samples.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = conditional_overlap_cdf(std::min(samples[i], 1.0 - s1sq), s1sq, n);
    const double lo = static_cast<double>(i) / samples.size();
    const double hi = static_cast<double>(i + 1) / samples.size();
    dmax = std::max({dmax, std::abs(f - lo), std::abs(f - hi)});
  }
  // 1% Kolmogorov-Smirnov critical value: 1.6276 / sqrt(n)
  EXPECT_LT(dmax, 1.6276 / std::sqrt(static_cast<double>(samples.size())));
}

TEST(MpSpectrumTest, KnownPoints) {
  const SpectrumStats unit = mp_spectrum_stats(1.0, SpectrumModel::kMimo);
  EXPECT_DOUBLE_EQ(unit.lambda_max, 4.0);
  EXPECT_DOUBLE_EQ(unit.lambda_min, 0.0);
  EXPECT_DOUBLE_EQ(unit.mean, 1.0);

  const SpectrumStats four = mp_spectrum_stats(4.0, SpectrumModel::kMimo);
  EXPECT_DOUBLE_EQ(four.lambda_max, 2.25);
  EXPECT_DOUBLE_EQ(four.lambda_min, 0.25);
  EXPECT_DOUBLE_EQ(four.mean, 0.25);

  const SpectrumStats cdma = mp_spectrum_stats(4.0, SpectrumModel::kCdma);
  EXPECT_DOUBLE_EQ(cdma.mean, 4.0);

  const SpectrumStats huge = mp_spectrum_stats(1e12, SpectrumModel::kMimo);
  EXPECT_NEAR(huge.lambda_max, 1.0, 1e-5);
  EXPECT_NEAR(huge.lambda_min, 1.0, 1e-5);
  EXPECT_THROW(mp_spectrum_stats(0.0, SpectrumModel::kMimo), std::invalid_argument);
}

TEST(Theorem1Test, HandValues) {
  LargeSystemParams p;
  p.nr_bar = 1.0;
  p.rho = 10.0;
  p.b_bar = 0.0;
  EXPECT_NEAR(theorem1_capacity(p), std::log2(11.0), 1e-12);
  p.b_bar = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(theorem1_capacity(p), std::log2(41.0), 1e-12);
  EXPECT_NEAR(std::log2(41.0), 5.3576, 1e-4);
  p.b_bar = 1.0;
  EXPECT_NEAR(theorem1_capacity(p), std::log2(26.0), 1e-12);
  EXPECT_NEAR(std::log2(26.0), 4.7004, 1e-4);
}

TEST(Theorem1Test, MonotoneInFeedback) {
  for (double nr_bar : {0.5, 1.0, 2.0}) {
    for (double rho : {1.0, 10.0}) {
      double prev = -1.0;
      for (int i = 0; i <= 40; ++i) {
        LargeSystemParams p;
        p.nr_bar = nr_bar;
        p.rho = rho;
        p.b_bar = i * 0.25;
        const double c = theorem1_capacity(p);
        EXPECT_GE(c, prev - 1e-12);
        prev = c;
      }
    }
  }
}

TEST(Theorem2Test, HandValues) {
  LargeSystemParams p;
  p.alpha = 1.0;
  p.sigma2 = 0.1;
  p.k_bar = 0.5;
  p.b_bar = 40.0;  // effectively infinite feedback: interference vanishes
  EXPECT_NEAR(theorem2_sinr(p), 10.0, 1e-9);
  p.b_bar = 0.0;
  EXPECT_NEAR(theorem2_sinr(p), 1.0 / 1.1, 1e-12);
  p.k_bar = 2.0;
  EXPECT_NEAR(theorem2_sinr(p), 1.0 / 2.1, 1e-12);
}

TEST(Theorem2Test, MonotoneWithinBranches) {
  LargeSystemParams p;
  p.alpha = 1.0;
  p.sigma2 = 0.1;
  // nondecreasing in b_bar at fixed load
  for (double k_bar : {0.25, 0.75, 1.5, 3.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 30; ++i) {
      p.k_bar = k_bar;
      p.b_bar = i * 0.2;
      const double g = theorem2_sinr(p);
      EXPECT_GE(g, prev - 1e-12);
      prev = g;
    }
  }
  // nonincreasing in k_bar within each branch
  for (double b_bar : {0.0, 0.5, 1.5}) {
    p.b_bar = b_bar;
    double prev = 1e300;
    for (double k_bar : {0.1, 0.3, 0.6, 0.9, 1.0}) {
      p.k_bar = k_bar;
      const double g = theorem2_sinr(p);
      EXPECT_LE(g, prev + 1e-12);
      prev = g;
    }
    prev = 1e300;
    for (double k_bar : {1.01, 1.5, 2.5, 4.0, 8.0}) {
      p.k_bar = k_bar;
      const double g = theorem2_sinr(p);
      EXPECT_LE(g, prev + 1e-12);
      prev = g;
    }
  }
}

// simulation check of the overlap limit at moderate size; the full-size
// version is an acceptance criterion
TEST(OverlapLimitTest, SimulationAtModerateSize) {
  const std::size_t n = 8;
  const unsigned bits = 8;  // one bit per dimension
  Rng master(91);
  OpCounter c;
  double sum = 0.0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    Rng rng = master.derive(t);
    const CVec u = test::random_unit(rng, n);
    const Codebook cb = generate_rvq(n, bits, rng.derive(1));
    const Selection sel = select_closest_in_angle(cb, UnitVector::normalized(u), c);
    sum += std::norm(inner(sel.vector.v, u));
  }
  // finite-size bias sits above the 0.5 limit; allow a generous band
  EXPECT_NEAR(sum / trials, overlap_limit(1.0), 0.1);
}
