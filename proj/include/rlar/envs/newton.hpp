#pragma once

#include <rlar/types.hpp>

#include <Eigen/LU>

#include <string>

namespace rlar::envs {

struct NewtonResult {
  Vecd x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton iteration on F(x) = 0. `system(x, J)` returns F(x) and
/// fills the Jacobian J. Steps are halved until the residual norm drops.
template <typename System>
NewtonResult damped_newton(System&& system, Vecd x, double tol = 1e-12, int max_iter = 100) {
  NewtonResult out;
  Matd jac;
  Vecd f = system(x, jac);
  double norm = f.norm();
  for (int it = 0; it < max_iter && norm > tol; ++it) {
    const Eigen::FullPivLU<Matd> lu(jac);
    if (!lu.isInvertible()) break;
    const Vecd dx = -lu.solve(f);
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const Vecd trial = x + step * dx;
      Matd trial_jac;
      const Vecd trial_f = system(trial, trial_jac);
      if (trial_f.allFinite() && trial_f.norm() < norm) {
        x = trial;
        f = trial_f;
        jac = std::move(trial_jac);
        norm = f.norm();
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!accepted) break;
  }
  out.x = std::move(x);
  out.residual_norm = norm;
  out.converged = norm <= tol;
  return out;
}

}  // namespace rlar::envs
