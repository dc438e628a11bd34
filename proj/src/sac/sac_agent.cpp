#include <rlar/approx/checkpoint.hpp>
#include <rlar/sac/sac_agent.hpp>

#include <cmath>
#include <numbers>

namespace rlar::sac {

nlohmann::json to_json(const SacOptions& o) {
  nlohmann::json j = {{"hidden", o.hidden},
                      {"gamma", o.gamma},
                      {"tau", o.tau},
                      {"q_learning_rate", o.q_learning_rate},
                      {"policy_learning_rate", o.policy_learning_rate},
                      {"alpha_learning_rate", o.alpha_learning_rate},
                      {"log_std_min", o.log_std_min},
                      {"log_std_max", o.log_std_max},
                      {"autotune_alpha", o.autotune_alpha},
                      {"initial_alpha", o.initial_alpha},
                      {"policy_frequency", o.policy_frequency}};
  j["target_entropy"] = o.target_entropy ? nlohmann::json(*o.target_entropy) : nlohmann::json(nullptr);
  return j;
}

SacOptions sac_options_from_json(const nlohmann::json& j) {
  SacOptions o;
  o.hidden = j.value("hidden", o.hidden);
  o.gamma = j.value("gamma", o.gamma);
  o.tau = j.value("tau", o.tau);
  o.q_learning_rate = j.value("q_learning_rate", o.q_learning_rate);
  o.policy_learning_rate = j.value("policy_learning_rate", o.policy_learning_rate);
  o.alpha_learning_rate = j.value("alpha_learning_rate", o.alpha_learning_rate);
  o.log_std_min = j.value("log_std_min", o.log_std_min);
  o.log_std_max = j.value("log_std_max", o.log_std_max);
  o.autotune_alpha = j.value("autotune_alpha", o.autotune_alpha);
  o.initial_alpha = j.value("initial_alpha", o.initial_alpha);
  o.policy_frequency = j.value("policy_frequency", o.policy_frequency);
  if (j.contains("target_entropy") && !j["target_entropy"].is_null()) o.target_entropy = j["target_entropy"].get<double>();
  if (!(o.gamma >= 0.0 && o.gamma < 1.0)) throw ConfigError("sac.gamma must lie in [0, 1)");
  if (!(o.tau > 0.0 && o.tau < 1.0)) throw ConfigError("sac.tau must lie in (0, 1)");
  if (!(o.log_std_min < o.log_std_max)) throw ConfigError("sac.log_std_min must be below log_std_max");
  if (!(o.initial_alpha > 0.0)) throw ConfigError("sac.initial_alpha must be positive");
  if (o.policy_frequency < 1) throw ConfigError("sac.policy_frequency must be >= 1");
  for (int h : o.hidden)
    if (h < 1) throw ConfigError("sac.hidden sizes must be positive");
  return o;
}

template <typename Scalar>
SacAgent<Scalar>::SacAgent(int obs_dim, Vecd action_half_width, SacOptions options, Rng& rng)
    : obs_dim_(obs_dim), half_width_(std::move(action_half_width)), options_(std::move(options)) {
  if (obs_dim_ < 1 || half_width_.size() < 1) throw ConfigError("SacAgent needs positive observation/action sizes");
  if ((half_width_.array() <= 0.0).any()) throw ConfigError("SacAgent: action half-widths must be positive");
  const int k = action_dim();
  q1_ = Net::mlp(obs_dim_ + k, options_.hidden, 1, approx::Activation::relu);
  q2_ = Net::mlp(obs_dim_ + k, options_.hidden, 1, approx::Activation::relu);
  policy_ = Net::mlp(obs_dim_, options_.hidden, 2 * k, approx::Activation::relu);
  q1_.init_fan_in(rng);
  q2_.init_fan_in(rng);
  policy_.init_fan_in(rng);
  q1_target_ = q1_;
  q2_target_ = q2_;
  q1_opt_ = Adam(q1_.param_count(), options_.q_learning_rate);
  q2_opt_ = Adam(q2_.param_count(), options_.q_learning_rate);
  policy_opt_ = Adam(policy_.param_count(), options_.policy_learning_rate);
  log_alpha_ = std::log(options_.initial_alpha);
  alpha_opt_ = approx::AdamState<double>(1, options_.alpha_learning_rate);
}

template <typename Scalar>
double SacAgent<Scalar>::target_entropy() const {
  return options_.target_entropy.value_or(-static_cast<double>(action_dim()));
}

template <typename Scalar>
typename SacAgent<Scalar>::Matrix SacAgent<Scalar>::draw_noise(Eigen::Index cols, Rng& rng) const {
  std::normal_distribution<double> normal;
  Matrix noise(action_dim(), cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int r = 0; r < action_dim(); ++r) noise(r, c) = static_cast<Scalar>(normal(rng));
  return noise;
}

template <typename Scalar>
PolicySample<Scalar> SacAgent<Scalar>::sample(const Matrix& obs, const Matrix& noise) const {
  const int k = action_dim();
  if (noise.rows() != k || noise.cols() != obs.cols()) throw ConfigError("SacAgent::sample: noise shape mismatch");
  PolicySample<Scalar> s;
  const Matrix out = policy_.forward(obs, &s.tape);
  s.mean = out.topRows(k);
  s.raw_log_std = out.bottomRows(k);
  const Scalar lo = static_cast<Scalar>(options_.log_std_min);
  const Scalar half_span = static_cast<Scalar>(0.5 * (options_.log_std_max - options_.log_std_min));
  s.log_std = (lo + half_span * (s.raw_log_std.array().tanh() + Scalar(1))).matrix();
  s.noise = noise;
  s.pre_tanh = s.mean + (s.log_std.array().exp() * noise.array()).matrix();
  s.actions = s.pre_tanh.array().tanh().matrix();

  double constant = 0.0;
  for (int j = 0; j < k; ++j) constant += 0.5 * std::log(2.0 * std::numbers::pi) + std::log(half_width_[j]);
  s.log_prob.resize(obs.cols());
  for (Eigen::Index c = 0; c < obs.cols(); ++c) {
    Scalar lp = static_cast<Scalar>(-constant);
    for (int j = 0; j < k; ++j)
      lp -= Scalar(0.5) * noise(j, c) * noise(j, c) + s.log_std(j, c) + log_one_minus_tanh_sq(s.pre_tanh(j, c));
    s.log_prob[c] = lp;
  }
  return s;
}

template <typename Scalar>
typename SacAgent<Scalar>::Matrix SacAgent<Scalar>::deterministic(const Matrix& obs) const {
  return policy_.forward(obs).topRows(action_dim()).array().tanh().matrix();
}

template <typename Scalar>
typename SacAgent<Scalar>::Matrix SacAgent<Scalar>::critic_input(const Matrix& obs, const Matrix& actions) {
  if (obs.cols() != actions.cols()) throw ConfigError("critic input: observation/action batch mismatch");
  Matrix in(obs.rows() + actions.rows(), obs.cols());
  in.topRows(obs.rows()) = obs;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

template <typename Scalar>
typename SacAgent<Scalar>::Vector SacAgent<Scalar>::min_q(const Matrix& obs, const Matrix& actions) const {
  const Matrix in = critic_input(obs, actions);
  return q1_.forward(in).row(0).cwiseMin(q2_.forward(in).row(0)).transpose();
}

template <typename Scalar>
typename SacAgent<Scalar>::Vector SacAgent<Scalar>::q_target(const SacBatch<Scalar>& batch,
                                                             const Matrix& next_noise) const {
  const auto next = sample(batch.next_obs, next_noise);
  const Matrix in = critic_input(batch.next_obs, next.actions);
  const Vector next_q = q1_target_.forward(in).row(0).cwiseMin(q2_target_.forward(in).row(0)).transpose();
  const Scalar alpha = static_cast<Scalar>(this->alpha());
  const Scalar gamma = static_cast<Scalar>(options_.gamma);
  const Vector soft = next_q - alpha * next.log_prob;
  return batch.rewards + (gamma * (Vector::Ones(batch.size()) - batch.dones).array() * soft.array()).matrix();
}

template <typename Scalar>
QLoss SacAgent<Scalar>::q_loss(const SacBatch<Scalar>& batch, const Vector& target, Vector* grad_q1,
                               Vector* grad_q2) const {
  const Matrix in = critic_input(batch.obs, batch.actions);
  const Scalar n = static_cast<Scalar>(batch.size());
  QLoss out;
  auto one = [&](const Net& net, Vector* grad) {
    approx::Tape<Scalar> tape;
    const Matrix q = net.forward(in, grad ? &tape : nullptr);
    const Matrix diff = q - target.transpose();
    if (grad) net.backward(tape, Scalar(2) * diff / n, grad, nullptr);
    return static_cast<double>(diff.squaredNorm() / n);
  };
  out.q1 = one(q1_, grad_q1);
  out.q2 = one(q2_, grad_q2);
  return out;
}

template <typename Scalar>
double SacAgent<Scalar>::policy_objective(const Matrix& obs, const Matrix& noise, Vector* grad,
                                          double* mean_log_prob) const {
  const auto s = sample(obs, noise);
  const Matrix in = critic_input(obs, s.actions);
  approx::Tape<Scalar> t1, t2;
  const Matrix q1 = q1_.forward(in, grad ? &t1 : nullptr);
  const Matrix q2 = q2_.forward(in, grad ? &t2 : nullptr);
  const Scalar alpha = static_cast<Scalar>(this->alpha());
  const Eigen::Index n = obs.cols();
  double total = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) total += static_cast<double>(std::min(q1(0, c), q2(0, c)) - alpha * s.log_prob[c]);
  if (mean_log_prob) *mean_log_prob = static_cast<double>(s.log_prob.mean());
  if (grad) {
    const Matrix ones = Matrix::Ones(1, n);
    Matrix g1, g2;
    q1_.backward(t1, ones, nullptr, &g1);
    q2_.backward(t2, ones, nullptr, &g2);
    const int k = action_dim();
    Matrix dq(k, n);
    for (Eigen::Index c = 0; c < n; ++c)
      dq.col(c) = q1(0, c) <= q2(0, c) ? g1.col(c).tail(k) : g2.col(c).tail(k);
    const auto y = s.actions.array();
    const auto d_pre = (dq.array() * (Scalar(1) - y.square()) - Scalar(2) * alpha * y).eval();
    const auto d_log_std = (d_pre * s.log_std.array().exp() * s.noise.array() + alpha).eval();
    const Scalar half_span = static_cast<Scalar>(0.5 * (options_.log_std_max - options_.log_std_min));
    const auto d_raw = (d_log_std * half_span * (Scalar(1) - s.raw_log_std.array().tanh().square())).eval();
    Matrix upstream(2 * k, n);
    upstream.topRows(k) = d_pre.matrix() / static_cast<Scalar>(n);
    upstream.bottomRows(k) = d_raw.matrix() / static_cast<Scalar>(n);
    policy_.backward(s.tape, upstream, grad, nullptr);
  }
  return total / static_cast<double>(n);
}

template <typename Scalar>
QLoss SacAgent<Scalar>::update_q(const SacBatch<Scalar>& batch, Rng& rng) {
  const Vector target = q_target(batch, draw_noise(batch.size(), rng));
  Vector g1, g2;
  const QLoss loss = q_loss(batch, target, &g1, &g2);
  if (!std::isfinite(loss.q1) || !std::isfinite(loss.q2))
    throw NumericalFault("critic loss is not finite after " + std::to_string(q_updates_) + " updates");
  approx::adam_step(q1_opt_, q1_.params(), g1);
  approx::adam_step(q2_opt_, q2_.params(), g2);
  ++q_updates_;
  return loss;
}

template <typename Scalar>
double SacAgent<Scalar>::update_policy(const Matrix& obs, Rng& rng) {
  Vector grad;
  double mean_log_prob = 0.0;
  const double objective = policy_objective(obs, draw_noise(obs.cols(), rng), &grad, &mean_log_prob);
  if (!std::isfinite(objective))
    throw NumericalFault("policy objective is not finite after " + std::to_string(policy_updates_) + " updates");
  approx::adam_step(policy_opt_, policy_.params(), grad, /*ascend=*/true);
  if (options_.autotune_alpha) {
    Vecd log_alpha(1);
    log_alpha[0] = log_alpha_;
    Vecd g(1);
    g[0] = -alpha() * (mean_log_prob + target_entropy());
    approx::adam_step(alpha_opt_, log_alpha, g);
    log_alpha_ = log_alpha[0];
  }
  ++policy_updates_;
  return objective;
}

template <typename Scalar>
void SacAgent<Scalar>::update_targets() {
  const Scalar tau = static_cast<Scalar>(options_.tau);
  q1_target_.params() = (Scalar(1) - tau) * q1_target_.params() + tau * q1_.params();
  q2_target_.params() = (Scalar(1) - tau) * q2_target_.params() + tau * q2_.params();
}

template <typename Scalar>
QLoss SacAgent<Scalar>::train_step(const SacBatch<Scalar>& batch, Rng& rng) {
  const QLoss loss = update_q(batch, rng);
  if (q_updates_ % options_.policy_frequency == 0) update_policy(batch.obs, rng);
  update_targets();
  return loss;
}

template <typename Scalar>
nlohmann::json SacAgent<Scalar>::to_json() const {
  using approx::to_json;
  std::vector<double> hw(half_width_.data(), half_width_.data() + half_width_.size());
  return {{"obs_dim", obs_dim_},
          {"action_half_width", hw},
          {"options", sac::to_json(options_)},
          {"q1", to_json(q1_)},
          {"q2", to_json(q2_)},
          {"q1_target", to_json(q1_target_)},
          {"q2_target", to_json(q2_target_)},
          {"policy", to_json(policy_)},
          {"q1_optimizer", to_json(q1_opt_)},
          {"q2_optimizer", to_json(q2_opt_)},
          {"policy_optimizer", to_json(policy_opt_)},
          {"log_alpha", log_alpha_},
          {"alpha_optimizer", to_json(alpha_opt_)},
          {"q_updates", q_updates_},
          {"policy_updates", policy_updates_}};
}

template <typename Scalar>
SacAgent<Scalar> SacAgent<Scalar>::from_json(const nlohmann::json& j) {
  try {
    SacAgent a;
    a.obs_dim_ = j.at("obs_dim").get<int>();
    const auto hw = j.at("action_half_width").get<std::vector<double>>();
    a.half_width_ = Eigen::Map<const Vecd>(hw.data(), static_cast<Eigen::Index>(hw.size()));
    a.options_ = sac_options_from_json(j.at("options"));
    a.q1_ = approx::net_from_json<Scalar>(j.at("q1"));
    a.q2_ = approx::net_from_json<Scalar>(j.at("q2"));
    a.q1_target_ = approx::net_from_json<Scalar>(j.at("q1_target"));
    a.q2_target_ = approx::net_from_json<Scalar>(j.at("q2_target"));
    a.policy_ = approx::net_from_json<Scalar>(j.at("policy"));
    a.q1_opt_ = approx::adam_from_json<Scalar>(j.at("q1_optimizer"));
    a.q2_opt_ = approx::adam_from_json<Scalar>(j.at("q2_optimizer"));
    a.policy_opt_ = approx::adam_from_json<Scalar>(j.at("policy_optimizer"));
    a.log_alpha_ = j.at("log_alpha").get<double>();
    a.alpha_opt_ = approx::adam_from_json<double>(j.at("alpha_optimizer"));
    a.q_updates_ = j.at("q_updates").get<long>();
    a.policy_updates_ = j.at("policy_updates").get<long>();
    const int k = a.action_dim();
    if (a.q1_.input_size() != a.obs_dim_ + k || a.policy_.output_size() != 2 * k ||
        a.q1_target_.param_count() != a.q1_.param_count() || a.q2_target_.param_count() != a.q2_.param_count())
      throw ConfigError("checkpoint: SAC network shapes do not match the recorded dimensions");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed SAC agent: ") + e.what());
  }
}

template class SacAgent<float>;
template class SacAgent<double>;

}  // namespace rlar::sac
