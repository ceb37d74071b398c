#pragma once

// Stationary expectations of the adaptive policy under Rayleigh fading and the
// threshold solve that makes both relay buffers drift-free.
//
// For thresholds T1 = -(lambda+1)/s and T2 = -s/(mu+1), s = lambda + mu + 1,
// the decision regions in the (gamma0, gamma2) quadrant are bounded by
//
//   L1(g2) = (1+g2)^{T1} - 1      U0 transmits iff gamma0 >= L1
//   L4(g2) = (1+g2)^{T2} - 1      RELAY iff L4 <= gamma0 <= L1
//   L2(g0) = (1+g0)^{1/T2} - 1    U2 transmits iff gamma2 >= L2
//   L3(g0) = (1+g0)^{1/T1} - 1    RELAY iff L3 <= gamma2 <= L2
//
// Every expectation is an outer quadrature over one link whose integrand is
// the closed-form inner integral of ln(1+x) over the other link's segment.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "twr/channel.hpp"
#include "twr/error.hpp"
#include "twr/math.hpp"
#include "twr/policy.hpp"

namespace twr {

/// E{p0 C0}, E{p2 C2}, E{p1 C2}, E{p1 C0} in bits/slot.
struct ExpectationSet {
  double e_p0_c0 = 0.0;
  double e_p2_c2 = 0.0;
  double e_p1_c2 = 0.0;
  double e_p1_c0 = 0.0;
};

/// Buffer drift per slot: h1 for Q0 (arrivals from U0 minus relay departures
/// toward U2), h2 likewise for Q2.
struct ResidualPair {
  double h1 = 0.0;
  double h2 = 0.0;

  double max_abs() const { return std::max(std::abs(h1), std::abs(h2)); }
};

inline ResidualPair make_residuals(const ExpectationSet& e) {
  return {e.e_p0_c0 - e.e_p1_c2, e.e_p2_c2 - e.e_p1_c0};
}

/// Probability of each decision under the stationary channel law.
struct DecisionProbabilities {
  double u0 = 0.0;
  double relay = 0.0;
  double u2 = 0.0;
};

/// Exponents of the four region boundaries, see the header comment.
struct LimitExponents {
  double l1 = 0.0;  // T1
  double l2 = 0.0;  // 1/T2
  double l3 = 0.0;  // 1/T1
  double l4 = 0.0;  // T2
};

/// Region boundaries; l1, l4 are evaluated at gamma2 and l2, l3 at gamma0.
struct IntegrationLimits {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
};

inline LimitExponents limit_exponents(const Thresholds& t) {
  if (!feasible(t)) throw ContractViolation("limit_exponents: infeasible thresholds");
  const double s = t.lambda + t.mu + 1.0;
  if (s == 0.0 || t.lambda == -1.0 || t.mu == -1.0) {
    throw SingularThresholds("thresholds on the singular boundary (lambda=-1, mu=-1 or lambda+mu+1=0)");
  }
  return {-(t.lambda + 1.0) / s, -(t.mu + 1.0) / s, -s / (t.lambda + 1.0), -s / (t.mu + 1.0)};
}

namespace detail {

// (1 + gamma)^e - 1 without cancellation for small gamma.
inline double power_limit(double gamma, double exponent) { return std::expm1(exponent * std::log1p(gamma)); }

}  // namespace detail

inline IntegrationLimits integration_limits(double gamma_opposite, const Thresholds& t) {
  if (!(gamma_opposite >= 0.0)) throw DomainError("integration_limits: SNR must be non-negative");
  const LimitExponents e = limit_exponents(t);
  return {detail::power_limit(gamma_opposite, e.l1), detail::power_limit(gamma_opposite, e.l2),
          detail::power_limit(gamma_opposite, e.l3), detail::power_limit(gamma_opposite, e.l4)};
}

/// The four stationary expectations, bits/slot.
inline ExpectationSet compute_expectations(const Thresholds& t, const ChannelConfig& config,
                                           const math::QuadratureSpec& spec = {}) {
  config.validate();
  const LimitExponents e = limit_exponents(t);
  const double w0 = config.omega0;
  const double w2 = config.omega2;
  using detail::power_limit;

  // Inner integrals over gamma0 (mean w0) as functions of gamma2, and vice versa.
  auto p0_c0 = [&](double g2) { return math::tail_log_integral(power_limit(g2, e.l1), w0); };
  auto p1_c0 = [&](double g2) {
    const double hi = power_limit(g2, e.l1);
    const double lo = std::min(power_limit(g2, e.l4), hi);
    return math::segment_log_integral(lo, hi, w0);
  };
  auto p2_c2 = [&](double g0) { return math::tail_log_integral(power_limit(g0, e.l2), w2); };
  auto p1_c2 = [&](double g0) {
    const double hi = power_limit(g0, e.l2);
    const double lo = std::min(power_limit(g0, e.l3), hi);
    return math::segment_log_integral(lo, hi, w2);
  };

  constexpr double to_bits = 1.0 / std::numbers::ln2;
  ExpectationSet out;
  out.e_p0_c0 = math::integrate_semi_infinite(p0_c0, w2, spec) * to_bits;
  out.e_p2_c2 = math::integrate_semi_infinite(p2_c2, w0, spec) * to_bits;
  out.e_p1_c2 = math::integrate_semi_infinite(p1_c2, w0, spec) * to_bits;
  out.e_p1_c0 = math::integrate_semi_infinite(p1_c0, w2, spec) * to_bits;
  return out;
}

/// Decision-region probabilities; the same integrals with ln(1+x) replaced by 1.
inline DecisionProbabilities decision_probabilities(const Thresholds& t, const ChannelConfig& config,
                                                    const math::QuadratureSpec& spec = {}) {
  config.validate();
  const LimitExponents e = limit_exponents(t);
  const double w0 = config.omega0;
  const double w2 = config.omega2;
  using detail::power_limit;

  auto survival = [](double x, double w) { return std::exp(-x / w); };
  DecisionProbabilities p;
  p.u0 = math::integrate_semi_infinite([&](double g2) { return survival(power_limit(g2, e.l1), w0); }, w2, spec);
  p.relay = math::integrate_semi_infinite(
      [&](double g2) { return survival(power_limit(g2, e.l4), w0) - survival(power_limit(g2, e.l1), w0); }, w2,
      spec);
  p.u2 = math::integrate_semi_infinite([&](double g0) { return survival(power_limit(g0, e.l2), w2); }, w0, spec);
  return p;
}

inline ResidualPair residuals(const Thresholds& t, const ChannelConfig& config,
                              const math::QuadratureSpec& spec = {}) {
  return make_residuals(compute_expectations(t, config, spec));
}

/// E{p1 (C0 + C2)}: the broadcast rate, which equals the sum-rate once both
/// buffers are stable.
inline double theoretical_sum_rate(const Thresholds& t, const ChannelConfig& config,
                                   const math::QuadratureSpec& spec = {}) {
  const ExpectationSet e = compute_expectations(t, config, spec);
  return e.e_p1_c0 + e.e_p1_c2;
}

struct SolverOptions {
  double residual_tolerance = 1e-6;
  int max_iterations = 200;
  double fd_step = 1e-5;
  // Newton iterates keep at least this slack from every feasibility inequality.
  double boundary_margin = 1e-9;
  Thresholds initial_guess{-0.58, -0.58};
  int stall_iterations = 40;
  // Longest Newton step in (ln T1, ln T2) before line-search halving.
  double max_log_step = 0.5;
  math::QuadratureSpec quadrature{};
};

struct SolverResult {
  Thresholds thresholds;
  ResidualPair residuals;
  ExpectationSet expectations;
  double theoretical_sum_rate = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
};

/// Thrown when no root is found within the iteration budget.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, SolverResult best) : std::runtime_error(what), best_(best) {}
  const SolverResult& best() const noexcept { return best_; }

 private:
  SolverResult best_;
};

namespace detail {

// Newton coordinates: the log ratio thresholds (ln T1, ln T2). The map to
// (lambda, mu) is a smooth bijection onto the feasible interior minus the
// relay-empty edge, so iterates never need projecting. The thin corners of
// the (lambda, mu) region, where strongly asymmetric links put the root,
// open up to ordinary-sized neighborhoods in these coordinates.
struct LogRatios {
  double upper = 0.0;
  double lower = 0.0;
};

inline Thresholds to_thresholds(const LogRatios& z) {
  return thresholds_from_ratios(std::exp(z.upper), std::exp(z.lower));
}

inline LogRatios to_log_ratios(const Thresholds& t) {
  return {std::log(upper_ratio_threshold(t)), std::log(lower_ratio_threshold(t))};
}

// Log-ratio search box and the smallest gap ln T1 - ln T2 probed.
inline constexpr double kMaxLogRatio = 40.0;
inline constexpr double kMinLogGap = 1e-6;

class ThresholdNewton {
 public:
  ThresholdNewton(const ChannelConfig& config, const SolverOptions& options) : config_(config), opt_(options) {}

  bool interior(const Thresholds& t) const { return feasibility_slack(t) > opt_.boundary_margin; }
  bool interior(const LogRatios& z) const {
    return std::isfinite(z.upper) && std::isfinite(z.lower) && interior(to_thresholds(z));
  }

  ResidualPair eval(const Thresholds& t) const { return residuals(t, config_, opt_.quadrature); }
  ResidualPair eval(const LogRatios& z) const { return eval(to_thresholds(z)); }

  static double norm2(const ResidualPair& h) { return h.h1 * h.h1 + h.h2 * h.h2; }

  // Jacobian column along one coordinate; central where both sides are interior.
  std::array<double, 2> partial(const LogRatios& z, const ResidualPair& h_here, bool along_upper) const {
    const double step = opt_.fd_step;
    auto shifted = [&](double d) {
      LogRatios s = z;
      (along_upper ? s.upper : s.lower) += d;
      return s;
    };
    const LogRatios fwd = shifted(step);
    const LogRatios bwd = shifted(-step);
    const bool f_ok = interior(fwd);
    const bool b_ok = interior(bwd);
    if (f_ok && b_ok) {
      const ResidualPair hf = eval(fwd);
      const ResidualPair hb = eval(bwd);
      return {(hf.h1 - hb.h1) / (2 * step), (hf.h2 - hb.h2) / (2 * step)};
    }
    if (f_ok) {
      const ResidualPair hf = eval(fwd);
      return {(hf.h1 - h_here.h1) / step, (hf.h2 - h_here.h2) / step};
    }
    if (b_ok) {
      const ResidualPair hb = eval(bwd);
      return {(h_here.h1 - hb.h1) / step, (h_here.h2 - hb.h2) / step};
    }
    return {std::nan(""), std::nan("")};
  }

  // Damped Newton from `start`; `iterations` accumulates across calls.
  Thresholds run(const Thresholds& start, ResidualPair& h, int& iterations, bool& converged, int budget) const {
    LogRatios z = to_log_ratios(start);
    h = eval(z);
    converged = false;
    while (iterations < budget) {
      if (h.max_abs() <= opt_.residual_tolerance) {
        converged = true;
        return to_thresholds(z);
      }
      const auto d_upper = partial(z, h, true);
      const auto d_lower = partial(z, h, false);
      // J = [[dh1/du, dh1/dv], [dh2/du, dh2/dv]]
      const double det = d_upper[0] * d_lower[1] - d_lower[0] * d_upper[1];
      if (!std::isfinite(det) || det == 0.0) break;
      const double step_upper = -(d_lower[1] * h.h1 - d_lower[0] * h.h2) / det;
      const double step_lower = -(-d_upper[1] * h.h1 + d_upper[0] * h.h2) / det;

      ++iterations;
      bool accepted = false;
      // Far from the root the linearization is poor; cap the step in log units.
      double damping = std::min(1.0, opt_.max_log_step / std::hypot(step_upper, step_lower));
      for (int halvings = 0; halvings < 50; ++halvings, damping *= 0.5) {
        const LogRatios trial{z.upper + damping * step_upper, z.lower + damping * step_lower};
        if (!interior(trial)) continue;
        const ResidualPair h_trial = eval(trial);
        if (norm2(h_trial) < norm2(h)) {
          z = trial;
          h = h_trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    converged = h.max_abs() <= opt_.residual_tolerance;
    return to_thresholds(z);
  }

  // Monotone bracketing. Raising T1 moves mass from U0 to the relay and
  // lowers both residuals; raising T2 moves mass from the relay to U2 and
  // raises both. So for fixed ln T2 = v, h1 has exactly one root u*(v) > v,
  // and g(v) = h2(u*(v), v) runs from -E{p1 C0} < 0 (T2 -> 0) to positive
  // values as T2 grows. Two nested Illinois searches locate the root.
  Thresholds bracket_root(const Thresholds& hint) const {
    const double tol = 0.1 * opt_.residual_tolerance;
    auto h_at = [&](double u, double v) { return eval(LogRatios{u, v}); };

    auto upper_for = [&](double v) {
      // h1 > 0 as T1 -> T2 (no relay slots); walk up until h1 < 0.
      double lo = v + kMinLogGap;
      double step = 1.0;
      double hi = v + step;
      double f_lo = h_at(lo, v).h1;
      double f_hi = h_at(hi, v).h1;
      while (f_hi > 0.0 && hi < kMaxLogRatio) {
        lo = hi;
        f_lo = f_hi;
        step *= 2.0;
        hi = v + step;
        f_hi = h_at(hi, v).h1;
      }
      if (f_lo <= 0.0) return lo;
      if (f_hi >= 0.0) return hi;
      return illinois([&](double u) { return h_at(u, v).h1; }, lo, hi, f_lo, f_hi, tol);
    };
    auto g = [&](double v) { return h_at(upper_for(v), v).h2; };

    double center = std::log(lower_ratio_threshold(hint));
    if (!std::isfinite(center)) center = 0.0;
    double lo = center - 1.0, hi = center + 1.0;
    double g_lo = g(lo), g_hi = g(hi);
    for (double width = 2.0; g_lo > 0.0 && lo > -kMaxLogRatio; width *= 2.0) {
      hi = lo;
      g_hi = g_lo;
      lo = center - width;
      g_lo = g(lo);
    }
    for (double width = 2.0; g_hi < 0.0 && hi < kMaxLogRatio; width *= 2.0) {
      lo = hi;
      g_lo = g_hi;
      hi = center + width;
      g_hi = g(hi);
    }
    const double v = (g_lo <= 0.0 && g_hi >= 0.0) ? illinois(g, lo, hi, g_lo, g_hi, tol)
                                                  : (std::abs(g_lo) < std::abs(g_hi) ? lo : hi);
    return to_thresholds(LogRatios{upper_for(v), v});
  }

  // Illinois variant of regula falsi on a sign-changing bracket.
  template <typename F>
  static double illinois(const F& f, double a, double b, double fa, double fb, double f_tol) {
    int side = 0;
    double c = a;
    for (int i = 0; i < 200; ++i) {
      c = (fa * b - fb * a) / (fa - fb);
      const double fc = f(c);
      if (std::abs(fc) <= f_tol || std::abs(b - a) < 1e-14 * (1.0 + std::abs(c))) return c;
      if ((fc > 0.0) == (fb > 0.0)) {
        b = c;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      } else {
        a = c;
        fa = fc;
        if (side == 1) fb *= 0.5;
        side = 1;
      }
    }
    return c;
  }

 private:
  ChannelConfig config_;
  SolverOptions opt_;
};

}  // namespace detail

/// Finds (lambda, mu) in the feasible interior with both residuals within
/// tolerance. Damped Newton on the log ratio thresholds with a central
/// finite-difference Jacobian; if it stalls, a monotone bracketing search
/// seeds a second Newton run.
inline SolverResult solve_thresholds(const ChannelConfig& config, const SolverOptions& options = {}) {
  config.validate();
  options.quadrature.validate();
  const detail::ThresholdNewton newton(config, options);

  SolverResult result;
  ResidualPair h;
  bool converged = false;
  // Newton converges in a handful of steps when it converges at all; past the
  // stall budget the remaining iterations go to the bracketed restart.
  int first_stage = 0;
  Thresholds x = newton.run(options.initial_guess, h, first_stage,
                            converged, std::min(options.stall_iterations, options.max_iterations));
  result.iterations = first_stage;
  if (!converged) {
    ResidualPair h_retry;
    bool converged_retry = false;
    const Thresholds x_retry = newton.run(newton.bracket_root(x), h_retry, result.iterations, converged_retry,
                                        options.max_iterations);
    result.used_fallback = true;
    if (converged_retry || h_retry.max_abs() < h.max_abs()) {
      x = x_retry;
      h = h_retry;
      converged = converged_retry;
    }
  }

  result.thresholds = x;
  result.expectations = compute_expectations(x, config, options.quadrature);
  result.residuals = make_residuals(result.expectations);
  result.theoretical_sum_rate = result.expectations.e_p1_c0 + result.expectations.e_p1_c2;
  result.converged = converged;
  if (!converged) {
    throw SolverFailure("threshold solve did not converge (max |h| = " + std::to_string(h.max_abs()) + ")",
                        result);
  }
  return result;
}

}  // namespace twr
