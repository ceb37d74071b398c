#pragma once

// Rayleigh block fading: one independent exponential SNR draw per link per slot.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "twr/error.hpp"

namespace twr {

/// Mean SNRs (linear) of the U0-relay and relay-U2 links plus the RNG seed.
struct ChannelConfig {
  double omega0 = 10.0;
  double omega2 = 10.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(omega0 > 0.0) || !(omega2 > 0.0) || !std::isfinite(omega0) || !std::isfinite(omega2)) {
      throw DomainError("channel mean SNRs must be positive and finite");
    }
  }
};

/// Instantaneous SNRs and capacities (bits/slot) of one slot. Both links are
/// reciprocal, so the same values serve uplink and broadcast.
struct SlotChannel {
  double gamma0 = 0.0;
  double gamma2 = 0.0;
  double c0 = 0.0;
  double c2 = 0.0;
};

/// Shannon capacity log2(1 + gamma) in bits per slot.
inline double capacity(double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("capacity: SNR must be non-negative");
  return std::log2(1.0 + gamma);
}

namespace detail {

// log2(1 + gamma), falling back to the first-order term when 1 + gamma rounds to 1.
inline double positive_capacity(double gamma) {
  const double c = std::log2(1.0 + gamma);
  return c > 0.0 ? c : gamma / std::numbers::ln2;
}

}  // namespace detail

/// Per-link random streams. Each link owns a 64-bit Mersenne Twister whose
/// seed is derived from the config seed with SplitMix64, so the streams are
/// independent and every platform produces the same sequence.
class ChannelRng {
 public:
  explicit ChannelRng(std::uint64_t seed) : link0_(splitmix64(seed, 0)), link2_(splitmix64(seed, 1)) {}

  /// Uniform on (0, 1]; 53 random bits, never zero so -ln(U) stays finite.
  double uniform_link0() { return to_unit(link0_()); }
  double uniform_link2() { return to_unit(link2_()); }

  static std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static double to_unit(std::uint64_t bits) { return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53; }

  std::mt19937_64 link0_;
  std::mt19937_64 link2_;
};

/// Draws one slot by inverse CDF, gamma = -omega ln(U).
inline SlotChannel sample_slot(const ChannelConfig& config, ChannelRng& rng) {
  SlotChannel ch;
  // U = 1 would give gamma = 0 and a zero capacity; nudge to the smallest positive SNR.
  ch.gamma0 = std::max(-config.omega0 * std::log(rng.uniform_link0()), std::numeric_limits<double>::min());
  ch.gamma2 = std::max(-config.omega2 * std::log(rng.uniform_link2()), std::numeric_limits<double>::min());
  ch.c0 = detail::positive_capacity(ch.gamma0);
  ch.c2 = detail::positive_capacity(ch.gamma2);
  return ch;
}

}  // namespace twr
