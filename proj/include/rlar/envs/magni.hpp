#pragma once

#include <cmath>

namespace rlar::envs {

inline constexpr double kMagniScale = 3.35506;
inline constexpr double kMagniExponent = 0.8353;
inline constexpr double kMagniOffset = 3.7932;
inline constexpr double kGlucoseLow = 10.0;
inline constexpr double kGlucoseHigh = 1000.0;
inline constexpr double kGlucosePenalty = -1e5;

/// Squared Magni risk (3.35506 ((ln G)^0.8353 - 3.7932))^2, G in mg/dL.
/// Arguments below 1e-3 are floored so optimizer rollouts that overshoot
/// stay finite.
template <typename T>
T magni_cost(const T& glucose) {
  using std::log;
  using std::pow;
  const T g = glucose > T(1e-3) ? glucose : T(1e-3);
  const T lg = log(g);
  const T base = lg > T(1e-12) ? lg : T(1e-12);
  const T risk = kMagniScale * (pow(base, kMagniExponent) - kMagniOffset);
  return risk * risk;
}

/// Glucose reward: -scale * risk(G)^2 inside [10, 1000] mg/dL, -1e5 otherwise.
inline double magni_risk(double glucose, double scale = 1.0) {
  if (!std::isfinite(glucose) || glucose < kGlucoseLow || glucose > kGlucoseHigh) return kGlucosePenalty;
  return -scale * magni_cost(glucose);
}

/// G where the risk vanishes: exp(3.7932^(1/0.8353)).
inline double magni_root() { return std::exp(std::pow(kMagniOffset, 1.0 / kMagniExponent)); }

}  // namespace rlar::envs
