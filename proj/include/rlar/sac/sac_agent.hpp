#pragma once

#include <rlar/approx/adam.hpp>
#include <rlar/approx/dense_net.hpp>

#include <json.hpp>

#include <optional>
#include <vector>

namespace rlar::sac {

struct SacOptions {
  std::vector<int> hidden{256, 256};
  double gamma = 0.99;
  /// Target tracking coefficient: targets <- (1 - tau) targets + tau online.
  double tau = 0.005;
  double q_learning_rate = 1e-3;
  double policy_learning_rate = 3e-4;
  double alpha_learning_rate = 1e-3;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  bool autotune_alpha = true;
  double initial_alpha = 1.0;
  /// Target entropy for alpha tuning; defaults to -action_dim when unset.
  std::optional<double> target_entropy;
  int policy_frequency = 2;
};

/// Minibatch in network coordinates: normalized observations (one column
/// per sample) and actions mapped affinely onto [-1, 1].
template <typename Scalar>
struct SacBatch {
  Mat<Scalar> obs;
  Mat<Scalar> actions;
  Mat<Scalar> next_obs;
  Vec<Scalar> rewards;
  Vec<Scalar> dones;

  Eigen::Index size() const { return obs.cols(); }
};

/// Reparameterized squashed-Gaussian draw: u = mean + std * noise,
/// action = tanh(u). `log_prob` is the density of the action in the
/// original (unnormalized) box.
template <typename Scalar>
struct PolicySample {
  Mat<Scalar> actions;
  Vec<Scalar> log_prob;
  Mat<Scalar> pre_tanh;
  Mat<Scalar> mean;
  Mat<Scalar> log_std;
  Mat<Scalar> raw_log_std;
  Mat<Scalar> noise;
  approx::Tape<Scalar> tape;
};

struct QLoss {
  double q1 = 0.0;
  double q2 = 0.0;
};

/// Soft actor-critic with twin critics, target critics, a tanh-squashed
/// Gaussian policy, and an optionally tuned entropy coefficient.
template <typename Scalar>
class SacAgent {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;
  using Net = approx::DenseNet<Scalar>;
  using Adam = approx::AdamState<Scalar>;

  SacAgent() = default;
  /// `action_half_width` is the half-width of the environment box per
  /// action dimension; it only enters the log-density.
  SacAgent(int obs_dim, Vecd action_half_width, SacOptions options, Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return static_cast<int>(half_width_.size()); }
  const SacOptions& options() const { return options_; }
  const Vecd& action_half_width() const { return half_width_; }

  const Net& q1() const { return q1_; }
  const Net& q2() const { return q2_; }
  const Net& q1_target() const { return q1_target_; }
  const Net& q2_target() const { return q2_target_; }
  const Net& policy() const { return policy_; }
  Net& q1() { return q1_; }
  Net& q2() { return q2_; }
  Net& q1_target() { return q1_target_; }
  Net& q2_target() { return q2_target_; }
  Net& policy() { return policy_; }

  double alpha() const { return std::exp(log_alpha_); }
  double log_alpha() const { return log_alpha_; }
  void set_log_alpha(double v) { log_alpha_ = v; }
  double target_entropy() const;
  long q_updates() const { return q_updates_; }
  long policy_updates() const { return policy_updates_; }

  /// Standard normal noise for `cols` samples.
  Matrix draw_noise(Eigen::Index cols, Rng& rng) const;
  PolicySample<Scalar> sample(const Matrix& obs, const Matrix& noise) const;
  PolicySample<Scalar> sample(const Matrix& obs, Rng& rng) const { return sample(obs, draw_noise(obs.cols(), rng)); }
  /// Squashed mean, used for evaluation without exploration.
  Matrix deterministic(const Matrix& obs) const;

  /// Critic input: observation rows stacked over action rows.
  static Matrix critic_input(const Matrix& obs, const Matrix& actions);
  /// Elementwise min of the two online critics.
  Vector min_q(const Matrix& obs, const Matrix& actions) const;

  /// Clipped double-Q regression target with next actions from the current
  /// policy driven by `next_noise`.
  Vector q_target(const SacBatch<Scalar>& batch, const Matrix& next_noise) const;
  /// Mean squared errors of both critics against `target`, with parameter
  /// gradients when requested.
  QLoss q_loss(const SacBatch<Scalar>& batch, const Vector& target, Vector* grad_q1, Vector* grad_q2) const;
  /// Mean over the batch of min_i Q_i(s, a) - alpha log pi(a|s) for
  /// reparameterized actions; `grad` receives its gradient w.r.t. the policy
  /// parameters and `mean_log_prob` the average log-density.
  double policy_objective(const Matrix& obs, const Matrix& noise, Vector* grad, double* mean_log_prob) const;

  /// One critic step on the batch; returns both losses.
  QLoss update_q(const SacBatch<Scalar>& batch, Rng& rng);
  /// One policy ascent step (plus alpha step when tuned); returns the objective.
  double update_policy(const Matrix& obs, Rng& rng);
  /// Polyak tracking of both target critics.
  void update_targets();
  /// Critic step every call, policy step every `policy_frequency` calls,
  /// then target tracking.
  QLoss train_step(const SacBatch<Scalar>& batch, Rng& rng);

  nlohmann::json to_json() const;
  static SacAgent from_json(const nlohmann::json& j);

 private:
  int obs_dim_ = 0;
  Vecd half_width_;
  SacOptions options_;
  Net q1_, q2_, q1_target_, q2_target_, policy_;
  Adam q1_opt_, q2_opt_, policy_opt_;
  double log_alpha_ = 0.0;
  approx::AdamState<double> alpha_opt_;
  long q_updates_ = 0;
  long policy_updates_ = 0;
};

/// Numerically stable log(1 - tanh(u)^2).
template <typename Scalar>
Scalar log_one_minus_tanh_sq(Scalar u) {
  const Scalar x = Scalar(-2) * u;
  const Scalar softplus = std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
  return Scalar(2) * (Scalar(std::log(2.0)) - u - softplus);
}

nlohmann::json to_json(const SacOptions& o);
SacOptions sac_options_from_json(const nlohmann::json& j);

extern template class SacAgent<float>;
extern template class SacAgent<double>;

}  // namespace rlar::sac
