#pragma once

// Adaptive link selection. The relay decision compares the capacity ratio
// C0/C2 against two thresholds set by the multipliers (lambda, mu):
//
//   U0     if C0/C2 >= -(lambda+1)/(lambda+mu+1)
//   U2     if C0/C2 <= -(lambda+mu+1)/(mu+1)
//   RELAY  otherwise
//
// The tests are evaluated in the equivalent division-free linear forms, which
// stay well defined on the boundary lambda + mu + 1 = 0.

#include <algorithm>
#include <limits>
#include <string>
#include <string_view>

#include "twr/buffer.hpp"
#include "twr/error.hpp"

namespace twr {

/// Multiplier pair parameterizing the decision thresholds.
struct Thresholds {
  double lambda = 0.0;
  double mu = 0.0;
};

/// The node that transmits in a slot.
enum class Transmitter { U0, Relay, U2 };

inline std::string_view to_string(Transmitter t) {
  switch (t) {
    case Transmitter::U0:
      return "U0";
    case Transmitter::Relay:
      return "RELAY";
    case Transmitter::U2:
      return "U2";
  }
  return "?";
}

/// Exactly one transmitter per slot; p0 + p1 + p2 = 1 holds by construction.
struct SlotDecision {
  Transmitter transmitter = Transmitter::Relay;

  friend bool operator==(const SlotDecision&, const SlotDecision&) = default;
};

/// lambda^2 + mu^2 + lambda mu + lambda + mu. Non-positive iff the relay
/// region [T2, T1] of the ratio axis is non-empty.
inline double quadratic_form(const Thresholds& t) {
  return t.lambda * t.lambda + t.mu * t.mu + t.lambda * t.mu + t.lambda + t.mu;
}

/// -1 <= lambda, mu <= 0, lambda + mu + 1 <= 0 and quadratic_form <= 0, with
/// exact comparisons.
inline bool feasible(const Thresholds& t) {
  return t.lambda >= -1.0 && t.lambda <= 0.0 && t.mu >= -1.0 && t.mu <= 0.0 && t.lambda + t.mu + 1.0 <= 0.0 &&
         quadratic_form(t) <= 0.0;
}

/// Smallest slack over the six inequalities; positive iff strictly interior.
inline double feasibility_slack(const Thresholds& t) {
  double slack = t.lambda + 1.0;
  slack = std::min(slack, t.mu + 1.0);
  slack = std::min(slack, -t.lambda);
  slack = std::min(slack, -t.mu);
  slack = std::min(slack, -(t.lambda + t.mu + 1.0));
  slack = std::min(slack, -quadratic_form(t));
  return slack;
}

/// Upper ratio threshold T1 = -(lambda+1)/(lambda+mu+1); +inf on the boundary.
inline double upper_ratio_threshold(const Thresholds& t) {
  const double s = t.lambda + t.mu + 1.0;
  return s == 0.0 ? std::numeric_limits<double>::infinity() : -(t.lambda + 1.0) / s;
}

/// Lower ratio threshold T2 = -(lambda+mu+1)/(mu+1).
inline double lower_ratio_threshold(const Thresholds& t) {
  return -(t.lambda + t.mu + 1.0) / (t.mu + 1.0);
}

/// Inverse of the ratio-threshold map: the unique (lambda, mu) whose
/// thresholds are T1 = upper and T2 = lower. Any 0 < lower <= upper < inf
/// lands in the feasible set, strictly inside when lower < upper.
inline Thresholds thresholds_from_ratios(double upper, double lower) {
  // With a = lambda+1, b = mu+1, d = -(lambda+mu+1): a = T1 d, b = d / T2, a + b + d = 1.
  const double d = 1.0 / (1.0 + upper + 1.0 / lower);
  return {upper * d - 1.0, d / lower - 1.0};
}

namespace detail {

inline void require_feasible(const Thresholds& t) {
  if (!feasible(t)) {
    throw ContractViolation("decide: infeasible thresholds (lambda=" + std::to_string(t.lambda) +
                            ", mu=" + std::to_string(t.mu) + ")");
  }
}

inline Transmitter decide_linear(double c0, double c2, const Thresholds& t) {
  const double s = t.lambda + t.mu + 1.0;
  const double u0_form = s * c0 + (t.lambda + 1.0) * c2;
  const double u2_form = (t.mu + 1.0) * c0 + s * c2;
  // Boundary equalities fall through to the relay.
  if (u0_form < 0.0) return Transmitter::U0;
  if (u2_form < 0.0) return Transmitter::U2;
  return Transmitter::Relay;
}

}  // namespace detail

/// Unconstrained decision for one slot with capacities c0, c2 (bits/slot).
inline SlotDecision decide(double c0, double c2, const Thresholds& t) {
  detail::require_feasible(t);
  return {detail::decide_linear(c0, c2, t)};
}

/// Decision under finite buffers. An uplink l whose acceptance would overflow
/// (c_l + q_l > cap_l) is excluded. When the unconstrained choice is excluded
/// the relay broadcasts if either queue holds data; with both queues empty the
/// other uplink is used if it fits, otherwise the slot is an idle broadcast.
inline SlotDecision decide_finite(double c0, double c2, const Thresholds& t, const BufferState& buf) {
  detail::require_feasible(t);
  const Transmitter preferred = detail::decide_linear(c0, c2, t);
  if (preferred == Transmitter::Relay) return {preferred};

  const bool u0_blocked = c0 + buf.q0 > buf.cap0;
  const bool u2_blocked = c2 + buf.q2 > buf.cap2;
  const bool blocked = preferred == Transmitter::U0 ? u0_blocked : u2_blocked;
  if (!blocked) return {preferred};

  if (buf.q0 + buf.q2 > 0.0) return {Transmitter::Relay};
  if (preferred == Transmitter::U0 && !u2_blocked) return {Transmitter::U2};
  if (preferred == Transmitter::U2 && !u0_blocked) return {Transmitter::U0};
  return {Transmitter::Relay};
}

}  // namespace twr
