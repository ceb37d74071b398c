#pragma once

#include <limits>

namespace twr {

inline constexpr double kUnlimitedBuffer = std::numeric_limits<double>::infinity();

/// Relay queue occupancies in bits. q0 holds U0's data bound for U2, q2 holds
/// U2's data bound for U0. A cap of kUnlimitedBuffer means no limit.
struct BufferState {
  double q0 = 0.0;
  double q2 = 0.0;
  double cap0 = kUnlimitedBuffer;
  double cap2 = kUnlimitedBuffer;

  bool valid() const { return q0 >= 0.0 && q2 >= 0.0 && q0 <= cap0 && q2 <= cap2; }
  bool capped() const { return cap0 != kUnlimitedBuffer || cap2 != kUnlimitedBuffer; }
};

}  // namespace twr
