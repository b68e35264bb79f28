#pragma once

// Shared per-component formulas. Every kernel entry point (scalar, multi,
// Gram, gradient) funnels through these so they cannot drift apart.

#include <cmath>

#include "slsm/kernel_functions.hpp"

namespace slsm::detail {

// Projections of a lag vector tau onto one component:
//   phase = tau . mu, skew = tau . gamma, half_quad = tau' Sigma tau / 2,
//   r = |tau|, half_quad_unit = half_quad / r^2 (only set when r > kLargeLag).
struct LagTerms {
  double phase = 0.0;
  double skew = 0.0;
  double half_quad = 0.0;
  double r = 0.0;
  double half_quad_unit = 0.0;
};

inline double slsm_value(const LagTerms& t) {
  if (t.r > kLargeLag) {
    const double c = 1.0 / t.r / t.r + t.half_quad_unit;  // C / tau^2
    const double h = t.skew / t.r;
    const double rc = t.r * c;
    return (c * std::cos(t.phase) - h * std::sin(t.phase) / t.r) / (rc * rc + h * h);
  }
  const double C = 1.0 + t.half_quad;
  return (C * std::cos(t.phase) - t.skew * std::sin(t.phase)) / (C * C + t.skew * t.skew);
}

// Partials of the SLSM component value with respect to C, the skew
// projection, and the phase.
struct SlsmPartials {
  double value;
  double d_c;
  double d_skew;
  double d_phase;
};

inline SlsmPartials slsm_partials(const LagTerms& t) {
  const double C = 1.0 + t.half_quad;
  const double g = t.skew;
  const double cs = std::cos(t.phase);
  const double sn = std::sin(t.phase);
  const double denom = C * C + g * g;
  const double k = slsm_value(t);
  return {k, (cs - 2.0 * C * k) / denom, (-sn - 2.0 * g * k) / denom, (-C * sn - g * cs) / denom};
}

inline double sm_value(const LagTerms& t) { return std::cos(t.phase) * std::exp(-t.half_quad); }

}  // namespace slsm::detail
