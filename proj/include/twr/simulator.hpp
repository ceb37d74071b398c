#pragma once

// Slot-level Monte Carlo of the buffered two-way relay.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "twr/buffer.hpp"
#include "twr/channel.hpp"
#include "twr/error.hpp"
#include "twr/policy.hpp"

namespace twr {

struct SimConfig {
  ChannelConfig channel;
  Thresholds thresholds;
  std::int64_t num_slots = 1'000'000;
  /// Equal cap applied to both buffers, bits. Empty means unlimited.
  std::optional<double> buffer_cap;

  void validate() const {
    channel.validate();
    if (num_slots < 1) throw ArgumentError("num_slots must be at least 1");
    if (buffer_cap && !(*buffer_cap >= 0.0)) throw ArgumentError("buffer cap must be non-negative");
    if (!feasible(thresholds)) throw ContractViolation("simulation thresholds are infeasible");
  }
};

struct SimReport {
  /// Delivered end-to-end bits per slot, both directions.
  double sum_rate = 0.0;
  /// Batch-means standard error of sum_rate.
  double sum_rate_stderr = 0.0;
  /// Bits accepted into Q0 (from U0) and Q2 (from U2) per slot.
  double uplink0_rate = 0.0;
  double uplink2_rate = 0.0;
  /// Bits delivered to U2 (drained from Q0) and to U0 (drained from Q2) per slot.
  double delivered_to_u2_rate = 0.0;
  double delivered_to_u0_rate = 0.0;
  /// Fractions of slots that went to U0, the relay and U2.
  std::array<double, 3> decision_fractions{};
  double final_q0 = 0.0;
  double final_q2 = 0.0;
  double mean_q0 = 0.0;
  double mean_q2 = 0.0;
  /// Fraction of relay slots in which a queue held less than the link could carry.
  double underrun_fraction = 0.0;
  std::int64_t num_slots = 0;
};

/// Bits handed to each destination in one slot.
struct Delivery {
  double to_u2 = 0.0;
  double to_u0 = 0.0;

  double total() const { return to_u2 + to_u0; }
};

/// One slot of buffer dynamics. Bits from Q0 ride the relay-U2 link at C2 and
/// bits from Q2 ride the relay-U0 link at C0, clipped by what is queued.
inline std::pair<BufferState, Delivery> step(BufferState buf, SlotDecision d, const SlotChannel& ch) {
  Delivery out;
  switch (d.transmitter) {
    case Transmitter::U0:
      buf.q0 += ch.c0;
      break;
    case Transmitter::U2:
      buf.q2 += ch.c2;
      break;
    case Transmitter::Relay:
      out.to_u2 = std::min(ch.c2, buf.q0);
      out.to_u0 = std::min(ch.c0, buf.q2);
      buf.q0 -= out.to_u2;
      buf.q2 -= out.to_u0;
      break;
  }
  return {buf, out};
}

/// Runs num_slots slots from empty buffers. Capped runs use decide_finite.
inline SimReport run(const SimConfig& config) {
  config.validate();
  ChannelRng rng(config.channel.seed);
  BufferState buf;
  if (config.buffer_cap) buf.cap0 = buf.cap2 = *config.buffer_cap;
  const bool capped = buf.capped();

  // Batch means over a fixed number of contiguous blocks.
  constexpr std::int64_t kBatches = 50;
  const std::int64_t n = config.num_slots;
  const std::int64_t batch_len = std::max<std::int64_t>(1, n / kBatches);
  double batch_sum = 0.0;
  double batch_mean_acc = 0.0;
  double batch_sq_acc = 0.0;
  std::int64_t batch_count = 0;
  std::int64_t in_batch = 0;

  std::array<std::int64_t, 3> counts{};
  std::int64_t underruns = 0;
  double accepted0 = 0.0, accepted2 = 0.0;
  double delivered2 = 0.0, delivered0 = 0.0;
  double q0_acc = 0.0, q2_acc = 0.0;

  for (std::int64_t i = 0; i < n; ++i) {
    const SlotChannel ch = sample_slot(config.channel, rng);
    const SlotDecision d =
        capped ? decide_finite(ch.c0, ch.c2, config.thresholds, buf) : decide(ch.c0, ch.c2, config.thresholds);
    const BufferState before = buf;
    auto [next, delivered] = step(buf, d, ch);
    buf = next;

    switch (d.transmitter) {
      case Transmitter::U0:
        ++counts[0];
        accepted0 += ch.c0;
        break;
      case Transmitter::Relay:
        ++counts[1];
        if (ch.c2 > before.q0 || ch.c0 > before.q2) ++underruns;
        break;
      case Transmitter::U2:
        ++counts[2];
        accepted2 += ch.c2;
        break;
    }
    delivered2 += delivered.to_u2;
    delivered0 += delivered.to_u0;
    q0_acc += buf.q0;
    q2_acc += buf.q2;

    batch_sum += delivered.total();
    if (++in_batch == batch_len) {
      const double m = batch_sum / static_cast<double>(batch_len);
      batch_mean_acc += m;
      batch_sq_acc += m * m;
      ++batch_count;
      batch_sum = 0.0;
      in_batch = 0;
    }
  }

  const double nd = static_cast<double>(n);
  SimReport r;
  r.num_slots = n;
  r.delivered_to_u2_rate = delivered2 / nd;
  r.delivered_to_u0_rate = delivered0 / nd;
  r.sum_rate = (delivered2 + delivered0) / nd;
  r.uplink0_rate = accepted0 / nd;
  r.uplink2_rate = accepted2 / nd;
  for (int k = 0; k < 3; ++k) r.decision_fractions[k] = static_cast<double>(counts[k]) / nd;
  r.final_q0 = buf.q0;
  r.final_q2 = buf.q2;
  r.mean_q0 = q0_acc / nd;
  r.mean_q2 = q2_acc / nd;
  r.underrun_fraction = counts[1] > 0 ? static_cast<double>(underruns) / static_cast<double>(counts[1]) : 0.0;
  if (batch_count > 1) {
    const double b = static_cast<double>(batch_count);
    const double mean = batch_mean_acc / b;
    const double var = std::max(0.0, (batch_sq_acc - b * mean * mean) / (b - 1.0));
    r.sum_rate_stderr = std::sqrt(var / b);
  }
  return r;
}

/// Zero-drift check: final occupancy per slot below 0.01 bits in both buffers.
inline bool stability_check(const SimReport& report) {
  const double nd = static_cast<double>(report.num_slots);
  return report.final_q0 / nd < 0.01 && report.final_q2 / nd < 0.01;
}

}  // namespace twr
