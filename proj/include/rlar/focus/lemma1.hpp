#pragma once

#include <rlar/types.hpp>

#include <cmath>

namespace rlar::focus {

/// Monte Carlo check of the blended-action law: with a_rl ~ N(mean_rl, S),
/// S diagonal, the blend beta a_reg + (1 - beta) a_rl is Gaussian with mean
/// beta a_reg + (1 - beta) mean_rl and covariance (1 - beta)^2 S, and its
/// mean minimizes |a - mean_rl|^2_S + lambda |a - a_reg|^2_S with
/// lambda = beta / (1 - beta).
struct Lemma1Report {
  Vecd empirical_mean;
  Vecd expected_mean;
  Vecd mean_standard_error;
  Matd empirical_covariance;
  Matd expected_covariance;
  /// Standard error of each covariance entry under the Gaussian law.
  Matd covariance_standard_error;
  /// Minimizer of the regularized objective found by a derivative-free
  /// coordinate search (independent of the closed form).
  Vecd minimizer;
  double max_mean_z = 0.0;
  double max_covariance_z = 0.0;
  double minimizer_vs_empirical = 0.0;
  double minimizer_vs_expected = 0.0;
  bool mean_ok = false;
  bool covariance_ok = false;
  bool minimizer_ok = false;

  bool passed() const { return mean_ok && covariance_ok && minimizer_ok; }
};

struct Lemma1Tolerances {
  double standard_errors = 4.0;
  double minimizer = 1e-3;
};

Lemma1Report lemma1_check(double beta, const Vecd& mean_rl, const Vecd& variances, const Vecd& a_reg,
                          int sample_count, Rng& rng, Lemma1Tolerances tol = {});

/// Golden-section minimization of a unimodal scalar function on [lo, hi].
template <typename F>
double golden_section(F&& f, double lo, double hi, double tol = 1e-12) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - r * (hi - lo);
  double d = lo + r * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - r * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + r * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rlar::focus
