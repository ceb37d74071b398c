#pragma once

// Special functions and adaptive quadrature used by the threshold solver and
// the reference-system model. All logarithms here are natural logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "twr/error.hpp"

namespace twr::math {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Tolerances and subdivision budget for the adaptive integrators.
struct QuadratureSpec {
  double relative_tolerance = 1e-9;
  double absolute_tolerance = 1e-11;
  int max_subdivisions = 1 << 16;

  void validate() const {
    if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0)) {
      throw ArgumentError("quadrature tolerances must be strictly positive");
    }
    if (max_subdivisions < 1) {
      throw ArgumentError("max_subdivisions must be at least 1");
    }
  }
};

namespace detail {

// Arguments at or below this use the power series, above it the continued
// fraction. Both reach full double precision at the crossover.
inline constexpr double kE1SeriesCrossover = 1.0;

inline double e1_series(double z) {
  double sum = 0.0;
  double term = 1.0;  // (-1)^(k+1) z^k / k!
  for (int k = 1; k < 200; ++k) {
    term *= (k == 1) ? z : -z / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return -kEulerGamma - std::log(z) + sum;
}

// Modified Lentz evaluation of e^z E1(z) for z > 1.
inline double scaled_e1_continued_fraction(double z) {
  constexpr double tiny = 1e-300;
  double b = z + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

inline void require_positive_argument(double z, const char* who) {
  if (!(z > 0.0)) {
    throw DomainError(std::string(who) + ": argument must be positive, got " + std::to_string(z));
  }
}

}  // namespace detail

/// Exponential integral E1(z) = integral from z to infinity of e^-t / t dt, z > 0.
inline double exp_integral_e1(double z) {
  detail::require_positive_argument(z, "exp_integral_e1");
  if (z <= detail::kE1SeriesCrossover) return detail::e1_series(z);
  if (z == kInfinity) return 0.0;
  return detail::scaled_e1_continued_fraction(z) * std::exp(-z);
}

/// e^z E1(z). Finite for every z > 0, unlike the unscaled product, which
/// overflows in e^z well before E1 underflows.
inline double exp_scaled_e1(double z) {
  detail::require_positive_argument(z, "exp_scaled_e1");
  if (z <= detail::kE1SeriesCrossover) return std::exp(z) * detail::e1_series(z);
  if (z == kInfinity) return 0.0;
  return detail::scaled_e1_continued_fraction(z);
}

/// Integral of ln(1+x) e^{-x/omega}/omega over [a, +inf).
inline double tail_log_integral(double a, double omega) {
  if (a == kInfinity) return 0.0;
  // e^{-a/w} ln(1+a) + e^{1/w} E1((a+1)/w), with e^{1/w} folded into the scaled E1.
  return std::exp(-a / omega) * (std::log1p(a) + exp_scaled_e1((a + 1.0) / omega));
}

/// Integral of ln(1+x) e^{-x/omega}/omega over [a, b]; b may be +inf.
inline double segment_log_integral(double a, double b, double omega) {
  if (!(omega > 0.0)) throw DomainError("segment_log_integral: omega must be positive");
  if (std::isnan(a) || std::isnan(b) || a < 0.0) {
    throw ArgumentError("segment_log_integral: limits must satisfy 0 <= a");
  }
  if (a > b) throw ArgumentError("segment_log_integral: lower limit exceeds upper limit");
  if (a == b) return 0.0;
  return std::max(0.0, tail_log_integral(a, omega) - tail_log_integral(b, omega));
}

/// Estimate and error bound from an adaptive integration.
struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK tables).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
};

template <typename F>
Panel kronrod_panel(const F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double f_center = f(center);
  double kronrod = f_center * kKronrodWeights[7];
  double gauss = f_center * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over the panels
/// delimited by `breakpoints` (ascending). The panel with the largest error
/// estimate is bisected until the summed error meets
/// max(absolute, relative * |value|). Throws NumericalFailure once
/// max_subdivisions bisections are spent.
template <typename F>
QuadratureResult integrate_panels(const F& f, const std::vector<double>& breakpoints,
                                  const QuadratureSpec& spec = {}) {
  spec.validate();
  if (breakpoints.size() < 2) throw ArgumentError("integrate_panels: need at least two breakpoints");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw ArgumentError("integrate_panels: breakpoints must be ascending");
  }

  auto by_error = [](const detail::Panel& x, const detail::Panel& y) { return x.error < y.error; };
  std::vector<detail::Panel> heap;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (breakpoints[i] == breakpoints[i + 1]) continue;
    heap.push_back(detail::kronrod_panel(f, breakpoints[i], breakpoints[i + 1]));
    value += heap.back().value;
    error += heap.back().error;
  }
  if (heap.empty()) return {};
  std::make_heap(heap.begin(), heap.end(), by_error);
  int subdivisions = 0;

  auto target = [&] { return std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(value)); };
  while (error > target()) {
    if (subdivisions >= spec.max_subdivisions) {
      throw NumericalFailure("adaptive quadrature did not converge", value, error);
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const detail::Panel left = detail::kronrod_panel(f, worst.lo, mid);
    const detail::Panel right = detail::kronrod_panel(f, mid, worst.hi);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    ++subdivisions;
  }

  // Re-sum in interval order so the running-update drift does not leak out.
  std::sort(heap.begin(), heap.end(), [](const auto& x, const auto& y) { return x.lo < y.lo; });
  QuadratureResult out;
  for (const auto& p : heap) {
    out.value += p.value;
    out.error += p.error;
  }
  out.subdivisions = subdivisions;
  return out;
}

/// integrate_panels on the single panel [lo, hi].
template <typename F>
QuadratureResult integrate_interval(const F& f, double lo, double hi, const QuadratureSpec& spec = {}) {
  if (!(lo <= hi)) throw ArgumentError("integrate_interval: require lo <= hi");
  if (lo == hi) return {};
  return integrate_panels(f, {lo, hi}, spec);
}

/// Upper limit of the exponential density support, in units of the mean.
/// The neglected tail mass is e^{-45} < 3e-20.
inline constexpr double kTruncationInMeans = 45.0;

namespace detail {

// Panels graded by factor 4 toward the origin, down to 45 * 4^-16 ~ 1e-8.
// The threshold integrands can concentrate in a sliver next to gamma = 0
// (a large exponent in (1+gamma)^T); a single wide panel would sample none
// of it and report false convergence.
inline const std::vector<double>& graded_breakpoints() {
  static const std::vector<double> points = [] {
    std::vector<double> p{0.0};
    for (int k = 16; k >= 0; --k) p.push_back(kTruncationInMeans * std::ldexp(1.0, -2 * k));
    return p;
  }();
  return points;
}

}  // namespace detail

/// Expectation of f(gamma) for gamma ~ exponential(mean omega).
template <typename F>
double integrate_semi_infinite(const F& f, double omega, const QuadratureSpec& spec = {}) {
  if (!(omega > 0.0)) throw DomainError("integrate_semi_infinite: omega must be positive");
  // Substitute x = gamma / omega so the weight becomes e^{-x} on [0, 45].
  auto weighted = [&](double x) { return f(omega * x) * std::exp(-x); };
  return integrate_panels(weighted, detail::graded_breakpoints(), spec).value;
}

}  // namespace twr::math
