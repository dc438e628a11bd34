#pragma once

#include <rlar/types.hpp>

#include <unsupported/Eigen/AutoDiff>

#include <cmath>

namespace rlar::approx {

inline double value_of(double x) { return x; }
inline double value_of(float x) { return x; }
template <typename Derivatives>
double value_of(const Eigen::AutoDiffScalar<Derivatives>& x) {
  return x.value();
}

template <typename Derived>
bool all_finite_values(const Eigen::MatrixBase<Derived>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(value_of(v(i)))) return false;
  return true;
}

template <typename Derived>
Vecd values_of(const Eigen::MatrixBase<Derived>& v) {
  Vecd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = value_of(v(i));
  return out;
}

/// Fixed-step classical Runge-Kutta integrator: `substeps` RK4 steps of
/// h = dt / substeps per call.
struct Rk4Stepper {
  double dt = 1.0;
  int substeps = 10;

  double substep() const { return dt / substeps; }

  void validate() const {
    if (!(dt > 0.0) || substeps < 1) throw ConfigError("Rk4Stepper needs dt > 0 and substeps >= 1");
  }
};

/// Advances state `s` under constant action `a` from time t to t + dt.
/// `f(s, a, t)` returns ds/dt. Throws EnvironmentFault when a derivative is
/// not finite.
template <typename State, typename Action, typename Dynamics>
State ode_step(const Rk4Stepper& stepper, Dynamics&& f, const State& s, const Action& a, double t) {
  const double h = stepper.substep();
  using Scalar = typename State::Scalar;
  const Scalar half(h / 2.0), full(h), sixth(h / 6.0);
  State x = s;
  auto checked = [&](const State& y, double tau) {
    State d = f(y, a, tau);
    if (!all_finite_values(d)) throw EnvironmentFault("non-finite derivative in ode_step", values_of(y));
    return d;
  };
  for (int i = 0; i < stepper.substeps; ++i) {
    const double tau = t + i * h;
    const State k1 = checked(x, tau);
    const State k2 = checked(State(x + half * k1), tau + h / 2.0);
    const State k3 = checked(State(x + half * k2), tau + h / 2.0);
    const State k4 = checked(State(x + full * k3), tau + h);
    x += sixth * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  }
  return x;
}

}  // namespace rlar::approx
