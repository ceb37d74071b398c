#include <gtest/gtest.h>

#include "twr/simulator.hpp"
#include "twr/solver.hpp"

using namespace twr;

namespace {

const ChannelConfig kSym{10.0, 10.0, 1};

SlotChannel slot(double c0, double c2) { return {0.0, 0.0, c0, c2}; }

const Thresholds& solved_symmetric() {
  static const Thresholds t = solve_thresholds(kSym).thresholds;
  return t;
}

}  // namespace

TEST(Step, RelayDrainsQ0AtC2) {
  auto [buf, d] = step({5.0, 0.0}, {Transmitter::Relay}, slot(1.0, 3.0));
  EXPECT_EQ(buf.q0, 2.0);
  EXPECT_EQ(d.to_u2, 3.0);
}

TEST(Step, RelayClipsQ2AtWhatIsQueued) {
  auto [buf, d] = step({0.0, 1.0}, {Transmitter::Relay}, slot(4.0, 1.0));
  EXPECT_EQ(buf.q2, 0.0);
  EXPECT_EQ(d.to_u0, 1.0);
}

TEST(Step, EmptyBroadcastIsIdle) {
  auto [buf, d] = step({0.0, 0.0}, {Transmitter::Relay}, slot(2.0, 2.0));
  EXPECT_EQ(buf.q0, 0.0);
  EXPECT_EQ(buf.q2, 0.0);
  EXPECT_EQ(d.total(), 0.0);
}

TEST(Step, UplinksFillTheirOwnQueue) {
  auto [a, da] = step({1.0, 2.0}, {Transmitter::U0}, slot(0.5, 7.0));
  EXPECT_EQ(a.q0, 1.5);
  EXPECT_EQ(a.q2, 2.0);
  EXPECT_EQ(da.total(), 0.0);
  auto [b, db] = step({1.0, 2.0}, {Transmitter::U2}, slot(0.5, 7.0));
  EXPECT_EQ(b.q0, 1.0);
  EXPECT_EQ(b.q2, 9.0);
  EXPECT_EQ(db.total(), 0.0);
}

TEST(Run, SingleSlotDeliversNothing) {
  for (std::uint64_t seed = 1; seed < 20; ++seed) {
    const SimReport r = run({{10.0, 10.0, seed}, {-0.6, -0.6}, 1, std::nullopt});
    EXPECT_EQ(r.sum_rate, 0.0);
  }
}

TEST(Run, ConfigValidation) {
  EXPECT_THROW(run({kSym, {-0.6, -0.6}, 0, std::nullopt}), ArgumentError);
  EXPECT_THROW(run({kSym, {0.0, 0.0}, 10, std::nullopt}), ContractViolation);
  EXPECT_THROW(run({kSym, {-0.6, -0.6}, 10, -1.0}), ArgumentError);
}

TEST(Run, BookkeepingIsExact) {
  const std::int64_t n = 200'000;
  for (const auto& cap : {std::optional<double>{}, std::optional<double>{7.0}}) {
    const SimReport r = run({{10.0, 3.0, 4}, {-0.7, -0.5}, n, cap});
    const double nd = static_cast<double>(n);
    // Delivered never exceeds accepted, and the gap is what is still queued.
    EXPECT_LE(r.delivered_to_u2_rate, r.uplink0_rate + 1e-12);
    EXPECT_LE(r.delivered_to_u0_rate, r.uplink2_rate + 1e-12);
    EXPECT_NEAR(r.uplink0_rate - r.delivered_to_u2_rate, r.final_q0 / nd, 1e-9);
    EXPECT_NEAR(r.uplink2_rate - r.delivered_to_u0_rate, r.final_q2 / nd, 1e-9);
    EXPECT_NEAR(r.sum_rate, r.uplink0_rate + r.uplink2_rate - (r.final_q0 + r.final_q2) / nd, 1e-9);
    EXPECT_NEAR(r.decision_fractions[0] + r.decision_fractions[1] + r.decision_fractions[2], 1.0, 1e-12);
    EXPECT_GE(r.sum_rate, 0.0);
  }
}

TEST(Run, CapRespectedEverySlot) {
  // Replays the run loop so the buffer can be inspected after each step.
  const Thresholds t{-0.6, -0.6};
  for (double cap : {0.0, 1.0, 5.0, 20.0}) {
    ChannelRng rng(3);
    BufferState buf{0.0, 0.0, cap, cap};
    for (int i = 0; i < 100'000; ++i) {
      const SlotChannel ch = sample_slot(kSym, rng);
      buf = step(buf, decide_finite(ch.c0, ch.c2, t, buf), ch).first;
      ASSERT_TRUE(buf.valid()) << "cap " << cap << " slot " << i;
    }
  }
}

TEST(Run, Deterministic) {
  const SimConfig cfg{{10.0, 1.0, 99}, {-0.7, -0.5}, 100'000, std::nullopt};
  const SimReport a = run(cfg), b = run(cfg);
  EXPECT_EQ(a.sum_rate, b.sum_rate);
  EXPECT_EQ(a.final_q0, b.final_q0);
  EXPECT_EQ(a.mean_q2, b.mean_q2);
  SimConfig other = cfg;
  other.channel.seed = 100;
  EXPECT_NE(run(other).sum_rate, a.sum_rate);
}

TEST(Run, MatchesTheoryAtSolvedThresholds) {
  const SolverResult s = solve_thresholds(kSym);
  const SimReport r = run({kSym, s.thresholds, 1'000'000, std::nullopt});
  EXPECT_NEAR(r.sum_rate / s.theoretical_sum_rate, 1.0, 0.01);
  EXPECT_TRUE(stability_check(r));
}

TEST(Run, AllRelayPolicyDeliversNothing) {
  const SimReport r = run({kSym, {-0.5, -0.5}, 100'000, std::nullopt});
  EXPECT_EQ(r.sum_rate, 0.0);
  EXPECT_EQ(r.decision_fractions[1], 1.0);
  EXPECT_TRUE(stability_check(r));
}

TEST(Run, ZeroCapDeliversNothing) {
  const SimReport r = run({kSym, solved_symmetric(), 100'000, 0.0});
  EXPECT_EQ(r.sum_rate, 0.0);
  EXPECT_EQ(r.final_q0, 0.0);
}

TEST(Run, LargeCapMatchesUnlimited) {
  const SimReport capped = run({kSym, solved_symmetric(), 1'000'000, 1e4});
  const SimReport free = run({kSym, solved_symmetric(), 1'000'000, std::nullopt});
  EXPECT_NEAR(capped.sum_rate / free.sum_rate, 1.0, 0.01);
}

TEST(Stability, BiasTowardUplinksFillsAQueue) {
  // Lowering lambda shrinks the relay region, so arrivals outpace departures.
  Thresholds t = solved_symmetric();
  t.lambda -= 0.05;
  ASSERT_TRUE(feasible(t));
  const ResidualPair h = residuals(t, kSym);
  ASSERT_GT(std::max(h.h1, h.h2), 0.01);
  const SimReport r = run({kSym, t, 1'000'000, std::nullopt});
  EXPECT_FALSE(stability_check(r));
}

TEST(Stability, BiasTowardRelayDrainsBothQueues) {
  // Raising lambda enlarges the relay region; both residuals turn negative and
  // the clipped queues stay near empty rather than growing.
  Thresholds t = solved_symmetric();
  t.lambda += 0.05;
  ASSERT_TRUE(feasible(t));
  const ResidualPair h = residuals(t, kSym);
  EXPECT_LT(h.h1, 0.0);
  EXPECT_LT(h.h2, 0.0);
  const SimReport r = run({kSym, t, 1'000'000, std::nullopt});
  EXPECT_TRUE(stability_check(r));
  EXPECT_GT(r.underrun_fraction, 0.1);
}

TEST(Stability, UnderrunFadesWithLongerRuns) {
  const SimReport short_run = run({kSym, solved_symmetric(), 10'000, std::nullopt});
  const SimReport long_run = run({kSym, solved_symmetric(), 1'000'000, std::nullopt});
  EXPECT_LT(long_run.underrun_fraction, short_run.underrun_fraction);
}
