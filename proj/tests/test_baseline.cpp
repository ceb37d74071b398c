#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "twr/baseline.hpp"

using namespace twr;

TEST(ErgodicCapacity, KnownValues) {
  EXPECT_NEAR(ergodic_capacity(10.0), 2.906514808414805, 1e-12);
  EXPECT_NEAR(ergodic_capacity(1.0), 0.860347382270886, 1e-12);
  EXPECT_NEAR(ergodic_capacity(100.0), 5.884048233683473, 1e-12);
  // Composition of the independent E1 oracle at 1.
  EXPECT_NEAR(ergodic_capacity(1.0), std::exp(1.0) * oracle::e1(1.0) / std::log(2.0), 1e-10);
}

TEST(ErgodicCapacity, VanishesAtLowSnr) { EXPECT_LT(ergodic_capacity(1e-6), 1e-5); }

TEST(ErgodicCapacity, StrictlyIncreasing) {
  double prev = 0.0;
  for (double w = 1e-4; w < 1e5; w *= 1.5) {
    EXPECT_GT(ergodic_capacity(w), prev);
    prev = ergodic_capacity(w);
  }
}

TEST(ErgodicCapacity, MatchesMonteCarlo) {
  for (double w : {1.0, 10.0}) {
    oracle::ExpSource src(static_cast<std::uint64_t>(w) + 3);
    oracle::Moments m;
    for (int i = 0; i < 1'000'000; ++i) m.add(std::log2(1.0 + src.draw(w)));
    EXPECT_NEAR(ergodic_capacity(w), m.mean(), 3.0 * m.stderr_()) << w;
  }
}

TEST(ErgodicCapacity, RejectsNonPositive) {
  EXPECT_THROW(ergodic_capacity(0.0), DomainError);
  EXPECT_THROW(ergodic_capacity(-3.0), DomainError);
}

TEST(ReferenceOptimum, SymmetricLinks) {
  const ReferenceResult r = reference_optimum(10.0, 10.0);
  const double c = ergodic_capacity(10.0);
  EXPECT_NEAR(r.sum_rate, 2.0 * c / 3.0, 1e-12);
  EXPECT_NEAR(r.sum_rate, 1.9376765389432, 1e-9);
  EXPECT_NEAR(r.t0_frac, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.t1_frac, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.t2_frac, 1.0 / 3.0, 1e-12);
}

TEST(ReferenceOptimum, FractionsSatisfyBothBroadcastConstraints) {
  for (double w2 : {0.5, 1.0, 10.0, 300.0}) {
    const ReferenceResult r = reference_optimum(10.0, w2);
    EXPECT_NEAR(r.t0_frac + r.t1_frac + r.t2_frac, 1.0, 1e-12);
    EXPECT_GT(r.t0_frac, 0.0);
    EXPECT_GT(r.t2_frac, 0.0);
    EXPECT_NEAR(r.t1_frac, r.ce0 * r.t0_frac / r.ce2, 1e-12);
    EXPECT_NEAR(r.t1_frac, r.ce2 * r.t2_frac / r.ce0, 1e-12);
    EXPECT_NEAR(reference_sum_rate(r.ce0, r.ce2, r.t0_frac, r.t2_frac), r.sum_rate, 1e-12);
    EXPECT_GT(r.sum_rate, 0.0);
  }
}

TEST(ReferenceOptimum, ExactlySymmetricInArguments) {
  for (double a : {0.3, 2.0, 10.0, 100.0}) {
    for (double b : {1.0, 7.0, 1000.0}) {
      EXPECT_EQ(reference_optimum(a, b).sum_rate, reference_optimum(b, a).sum_rate);
    }
  }
}

TEST(ReferenceOptimum, MatchesSimplexGridSearch) {
  for (int k = 0; k <= 8; ++k) {
    const double w0 = 10.0, w2 = w0 * std::pow(10.0, -1.0 + 0.25 * k);
    const ReferenceResult r = reference_optimum(w0, w2);
    // Coarse grid here; the acceptance run uses the 1e-4 grid.
    const double grid = oracle::reference_grid_search(r.ce0, r.ce2, 2e-3);
    EXPECT_LE(grid, r.sum_rate + 1e-12);
    EXPECT_NEAR(grid, r.sum_rate, 2e-3) << w2;
  }
}
