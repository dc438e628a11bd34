#include <rlar/focus/focus_module.hpp>
#include <rlar/focus/lemma1.hpp>

#include <cmath>

namespace rlar::focus {

Lemma1Report lemma1_check(double beta, const Vecd& mean_rl, const Vecd& variances, const Vecd& a_reg,
                          int sample_count, Rng& rng, Lemma1Tolerances tol) {
  const Eigen::Index k = mean_rl.size();
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("lemma1_check: beta must lie in (0, 1)");
  if (variances.size() != k || a_reg.size() != k || (variances.array() <= 0.0).any())
    throw ConfigError("lemma1_check: inconsistent dimensions or non-positive variances");
  if (sample_count < 2) throw ConfigError("lemma1_check: need at least two samples");

  std::normal_distribution<double> normal;
  const Vecd sd = variances.cwiseSqrt();
  const Vecd beta_vec = Vecd::Constant(k, beta);
  Matd samples(k, sample_count);
  for (int i = 0; i < sample_count; ++i) {
    Vecd a_rl(k);
    for (Eigen::Index j = 0; j < k; ++j) a_rl[j] = mean_rl[j] + sd[j] * normal(rng);
    samples.col(i) = blend(beta_vec, a_reg, a_rl);
  }

  Lemma1Report r;
  const double n = sample_count;
  r.empirical_mean = samples.rowwise().mean();
  const Matd centered = samples.colwise() - r.empirical_mean;
  r.empirical_covariance = centered * centered.transpose() / (n - 1.0);
  r.expected_mean = beta * a_reg + (1.0 - beta) * mean_rl;
  r.expected_covariance = ((1.0 - beta) * (1.0 - beta) * variances).asDiagonal();
  r.mean_standard_error = (r.expected_covariance.diagonal() / n).cwiseSqrt();
  // Var of a sample covariance entry: (S_ij^2 + S_ii S_jj) / n.
  r.covariance_standard_error.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = r.expected_covariance(i, j);
      r.covariance_standard_error(i, j) =
          std::sqrt((s * s + r.expected_covariance(i, i) * r.expected_covariance(j, j)) / n);
    }
  r.max_mean_z = ((r.empirical_mean - r.expected_mean).cwiseAbs().cwiseQuotient(r.mean_standard_error)).maxCoeff();
  r.max_covariance_z = ((r.empirical_covariance - r.expected_covariance).cwiseAbs().cwiseQuotient(
                            r.covariance_standard_error))
                           .maxCoeff();

  // Regularized objective; separable because S is diagonal.
  const double lambda = beta / (1.0 - beta);
  r.minimizer.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    auto objective = [&](double a) {
      const double d_rl = a - mean_rl[j];
      const double d_reg = a - a_reg[j];
      return (d_rl * d_rl + lambda * d_reg * d_reg) / variances[j];
    };
    const double lo = std::min(mean_rl[j], a_reg[j]) - 1.0;
    const double hi = std::max(mean_rl[j], a_reg[j]) + 1.0;
    r.minimizer[j] = golden_section(objective, lo, hi);
  }
  r.minimizer_vs_empirical = (r.minimizer - r.empirical_mean).cwiseAbs().maxCoeff();
  r.minimizer_vs_expected = (r.minimizer - r.expected_mean).cwiseAbs().maxCoeff();

  r.mean_ok = r.max_mean_z <= tol.standard_errors;
  r.covariance_ok = r.max_covariance_z <= tol.standard_errors;
  r.minimizer_ok = r.minimizer_vs_empirical <= tol.minimizer;
  return r;
}

}  // namespace rlar::focus
