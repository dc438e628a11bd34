#pragma once

#include <rlar/approx/adam.hpp>
#include <rlar/approx/dense_net.hpp>
#include <rlar/sac/sac_agent.hpp>

#include <json.hpp>

#include <vector>

namespace rlar::focus {

struct FocusOptions {
  std::vector<int> hidden{128, 32};
  double learning_rate = 5e-6;
  /// Pretraining drives every output above this level on held-out states.
  double threshold = 0.999;
  double pretrain_learning_rate = 1e-3;
  /// Pretraining samples observations uniformly from [-box, box]^d in
  /// normalized coordinates.
  double pretrain_box = 1.5;
  int pretrain_batch = 256;
  int pretrain_max_steps = 200000;
  int validation_samples = 10000;
  int check_every = 100;
  /// Outputs are clamped into [clamp, 1 - clamp].
  double clamp = 1e-6;
  /// One state-independent weight per action dimension instead of a network.
  bool scalar = false;
};

nlohmann::json to_json(const FocusOptions& o);
FocusOptions focus_options_from_json(const nlohmann::json& j);

struct PretrainReport {
  int steps = 0;
  double min_validation_beta = 0.0;
  double final_loss = 0.0;
};

/// beta = (tanh(z) + 1) / 2 clamped into [clamp, 1 - clamp].
template <typename Scalar>
Mat<Scalar> squash_weight(const Mat<Scalar>& z, double clamp) {
  const Scalar lo = static_cast<Scalar>(clamp);
  const Scalar hi = static_cast<Scalar>(1.0 - clamp);
  return (Scalar(0.5) * (z.array().tanh() + Scalar(1))).cwiseMax(lo).cwiseMin(hi).matrix();
}

/// Componentwise beta * a_reg + (1 - beta) * a_rl.
template <typename Derived1, typename Derived2, typename Derived3>
auto blend(const Eigen::MatrixBase<Derived1>& beta, const Eigen::MatrixBase<Derived2>& a_reg,
           const Eigen::MatrixBase<Derived3>& a_rl) {
  return (beta.array() * a_reg.array() + (1 - beta.array()) * a_rl.array()).matrix();
}

/// Blend in environment units, then clip into [low, high].
Vecd blend_action(const Vecd& beta, const Vecd& a_reg, const Vecd& a_rl, const Vecd& low, const Vecd& high);

/// State-dependent blend weights beta(s) in (0, 1)^k, or a scalar weight
/// vector in the ablation mode.
template <typename Scalar>
class FocusModule {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  FocusModule() = default;
  FocusModule(int obs_dim, int action_dim, FocusOptions options, Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const FocusOptions& options() const { return options_; }
  bool scalar() const { return options_.scalar; }

  /// Pre-squash outputs z (k x batch).
  Matrix logits(const Matrix& obs, approx::Tape<Scalar>* tape = nullptr) const;
  Matrix beta(const Matrix& obs) const { return squash_weight(logits(obs), options_.clamp); }

  /// Trainable parameters: network weights, or the k logits in scalar mode.
  const Vector& params() const { return options_.scalar ? scalar_logits_ : net_.params(); }
  void set_params(const Vector& p);
  const approx::DenseNet<Scalar>& net() const { return net_; }

  /// Mean over the batch of min_i Q_i(s, beta(s) a_reg + (1 - beta(s)) a_rl)
  /// with actions in [-1, 1] coordinates; `grad` w.r.t. params().
  double objective(const sac::SacAgent<Scalar>& agent, const Matrix& obs, const Matrix& a_reg, const Matrix& a_rl,
                   Vector* grad) const;
  /// One ascent step of the objective with a_rl freshly drawn from the
  /// agent's current policy. Agent parameters are untouched.
  double update(const sac::SacAgent<Scalar>& agent, const Matrix& obs, const Matrix& a_reg, Rng& rng);

  /// Regression of beta toward 1 until the validation minimum clears the
  /// threshold. Throws ConfigError when the step budget runs out.
  PretrainReport pretrain(Rng& rng);
  /// Smallest output over `samples` uniform draws from the pretraining box.
  double min_beta_on_box(int samples, Rng& rng) const;

  long updates() const { return updates_; }

  nlohmann::json to_json() const;
  static FocusModule from_json(const nlohmann::json& j);

 private:
  Vector& mutable_params() { return options_.scalar ? scalar_logits_ : net_.params(); }
  Matrix sample_box(int count, Rng& rng) const;

  int obs_dim_ = 0;
  int action_dim_ = 0;
  FocusOptions options_;
  approx::DenseNet<Scalar> net_;
  Vector scalar_logits_;
  approx::AdamState<Scalar> optimizer_;
  long updates_ = 0;
};

extern template class FocusModule<float>;
extern template class FocusModule<double>;

}  // namespace rlar::focus
