#pragma once

// Fixed-schedule reference: U0, U2 and the relay transmit in turn for time
// fractions t0, t2, t1, each link running at its ergodic capacity.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "twr/error.hpp"
#include "twr/math.hpp"

namespace twr {

struct ReferenceResult {
  double ce0 = 0.0;
  double ce2 = 0.0;
  double t0_frac = 0.0;
  double t1_frac = 0.0;
  double t2_frac = 0.0;
  double sum_rate = 0.0;
};

/// E{log2(1 + gamma)} for gamma ~ exponential(omega): e^{1/omega} E1(1/omega) / ln 2.
inline double ergodic_capacity(double omega) {
  if (!(omega > 0.0)) throw DomainError("ergodic_capacity: omega must be positive");
  return math::exp_scaled_e1(1.0 / omega) / std::numbers::ln2;
}

/// Sum-rate of a fixed schedule. The broadcast lasts long enough for the
/// larger of the two buffered payloads.
inline double reference_sum_rate(double ce0, double ce2, double t0, double t2) {
  const double t1 = std::max(ce0 * t0 / ce2, ce2 * t2 / ce0);
  return (ce0 * t0 + ce2 * t2) / (t0 + t1 + t2);
}

/// Optimal fixed schedule. Both broadcast constraints are tight at the
/// optimum: t0 : t1 : t2 = Ce2^2 : Ce0 Ce2 : Ce0^2.
inline ReferenceResult reference_optimum(double omega0, double omega2) {
  ReferenceResult r;
  r.ce0 = ergodic_capacity(omega0);
  r.ce2 = ergodic_capacity(omega2);
  const double denom = r.ce0 * r.ce0 + r.ce2 * r.ce2 + r.ce0 * r.ce2;
  r.t0_frac = r.ce2 * r.ce2 / denom;
  r.t1_frac = r.ce0 * r.ce2 / denom;
  r.t2_frac = r.ce0 * r.ce0 / denom;
  r.sum_rate = r.ce0 * r.ce2 * (r.ce0 + r.ce2) / denom;
  return r;
}

}  // namespace twr
