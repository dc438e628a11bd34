#pragma once

#include <rlar/types.hpp>

#include <functional>

namespace rlar::regularizer {

/// Objective callback: returns f(x) and, when `grad` is non-null, fills it.
using Objective = std::function<double(const Vecd& x, Vecd* grad)>;

struct BoxBfgsOptions {
  int max_iterations = 200;
  /// Stop when the projected gradient's inf-norm falls below
  /// gradient_tolerance * max(1, |f|).
  double gradient_tolerance = 1e-6;
  /// Also stop when an accepted step lowers f by no more than
  /// value_tolerance * max(1, |f|).
  double value_tolerance = 1e-10;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

struct BoxBfgsResult {
  Vecd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes f over lo <= x <= hi with an inverse-Hessian BFGS model on the
/// free variables and a projected Armijo backtracking search. The iterate
/// never leaves the box, and f never increases between iterations.
BoxBfgsResult minimize_in_box(const Objective& f, Vecd x0, const Vecd& lo, const Vecd& hi,
                              const BoxBfgsOptions& options = {});

}  // namespace rlar::regularizer
