#pragma once

#include <cmath>

namespace heisenlab {

/// psi(r) = exp(-1/r) for r > 0, else 0.
inline double smooth_psi(double r) { return r > 0.0 ? std::exp(-1.0 / r) : 0.0; }

/// C-infinity transition: 1 on (-inf, 1/2], 0 on [1, inf).
inline double smooth_transition(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = smooth_psi(1.0 - s);
  const double b = smooth_psi(s - 0.5);
  return a / (a + b);
}

}  // namespace heisenlab
