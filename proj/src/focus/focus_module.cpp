#include <rlar/approx/checkpoint.hpp>
#include <rlar/focus/focus_module.hpp>

#include <cmath>

namespace rlar::focus {

nlohmann::json to_json(const FocusOptions& o) {
  return {{"hidden", o.hidden},
          {"learning_rate", o.learning_rate},
          {"threshold", o.threshold},
          {"pretrain_learning_rate", o.pretrain_learning_rate},
          {"pretrain_box", o.pretrain_box},
          {"pretrain_batch", o.pretrain_batch},
          {"pretrain_max_steps", o.pretrain_max_steps},
          {"validation_samples", o.validation_samples},
          {"check_every", o.check_every},
          {"clamp", o.clamp},
          {"scalar", o.scalar}};
}

FocusOptions focus_options_from_json(const nlohmann::json& j) {
  FocusOptions o;
  o.hidden = j.value("hidden", o.hidden);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.threshold = j.value("threshold", o.threshold);
  o.pretrain_learning_rate = j.value("pretrain_learning_rate", o.pretrain_learning_rate);
  o.pretrain_box = j.value("pretrain_box", o.pretrain_box);
  o.pretrain_batch = j.value("pretrain_batch", o.pretrain_batch);
  o.pretrain_max_steps = j.value("pretrain_max_steps", o.pretrain_max_steps);
  o.validation_samples = j.value("validation_samples", o.validation_samples);
  o.check_every = j.value("check_every", o.check_every);
  o.clamp = j.value("clamp", o.clamp);
  o.scalar = j.value("scalar", o.scalar);
  if (!(o.threshold > 0.5 && o.threshold < 1.0 - o.clamp))
    throw ConfigError("focus.threshold must lie in (0.5, 1 - clamp)");
  if (!(o.clamp > 0.0 && o.clamp < 0.5)) throw ConfigError("focus.clamp must lie in (0, 0.5)");
  if (!(o.pretrain_box > 0.0)) throw ConfigError("focus.pretrain_box must be positive");
  if (o.pretrain_batch < 1 || o.validation_samples < 1 || o.check_every < 1 || o.pretrain_max_steps < 1)
    throw ConfigError("focus pretraining sizes must be positive");
  return o;
}

Vecd blend_action(const Vecd& beta, const Vecd& a_reg, const Vecd& a_rl, const Vecd& low, const Vecd& high) {
  return Vecd(blend(beta, a_reg, a_rl)).cwiseMax(low).cwiseMin(high);
}

template <typename Scalar>
FocusModule<Scalar>::FocusModule(int obs_dim, int action_dim, FocusOptions options, Rng& rng)
    : obs_dim_(obs_dim), action_dim_(action_dim), options_(std::move(options)) {
  if (obs_dim_ < 1 || action_dim_ < 1) throw ConfigError("FocusModule needs positive observation/action sizes");
  net_ = approx::DenseNet<Scalar>::mlp(obs_dim_, options_.hidden, action_dim_, approx::Activation::relu);
  net_.init_fan_in(rng);
  scalar_logits_ = Vector::Zero(action_dim_);
  optimizer_ = approx::AdamState<Scalar>(params().size(), options_.pretrain_learning_rate);
}

template <typename Scalar>
typename FocusModule<Scalar>::Matrix FocusModule<Scalar>::logits(const Matrix& obs, approx::Tape<Scalar>* tape) const {
  if (options_.scalar) return scalar_logits_.replicate(1, obs.cols());
  return net_.forward(obs, tape);
}

template <typename Scalar>
void FocusModule<Scalar>::set_params(const Vector& p) {
  if (p.size() != params().size()) throw ConfigError("FocusModule parameter count mismatch");
  mutable_params() = p;
}

template <typename Scalar>
double FocusModule<Scalar>::objective(const sac::SacAgent<Scalar>& agent, const Matrix& obs, const Matrix& a_reg,
                                      const Matrix& a_rl, Vector* grad) const {
  const Eigen::Index n = obs.cols();
  if (a_reg.rows() != action_dim_ || a_rl.rows() != action_dim_ || a_reg.cols() != n || a_rl.cols() != n)
    throw ConfigError("FocusModule::objective: action batch shape mismatch");
  approx::Tape<Scalar> tape;
  const Matrix z = logits(obs, grad ? &tape : nullptr);
  const Matrix b = squash_weight(z, options_.clamp);
  const Matrix mixed = Matrix(blend(b, a_reg, a_rl)).cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  const Matrix in = sac::SacAgent<Scalar>::critic_input(obs, mixed);
  approx::Tape<Scalar> t1, t2;
  const Matrix q1 = agent.q1().forward(in, grad ? &t1 : nullptr);
  const Matrix q2 = agent.q2().forward(in, grad ? &t2 : nullptr);
  double total = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) total += static_cast<double>(std::min(q1(0, c), q2(0, c)));
  if (grad) {
    const Matrix ones = Matrix::Ones(1, n);
    Matrix g1, g2;
    agent.q1().backward(t1, ones, nullptr, &g1);
    agent.q2().backward(t2, ones, nullptr, &g2);
    Matrix dq(action_dim_, n);
    for (Eigen::Index c = 0; c < n; ++c)
      dq.col(c) = q1(0, c) <= q2(0, c) ? g1.col(c).tail(action_dim_) : g2.col(c).tail(action_dim_);
    // d beta / dz = (1 - tanh^2 z) / 2; the clamp is treated as the identity.
    const Matrix dz = (dq.array() * (a_reg - a_rl).array() * Scalar(0.5) * (Scalar(1) - z.array().tanh().square()))
                          .matrix() /
                      static_cast<Scalar>(n);
    if (options_.scalar)
      *grad = dz.rowwise().sum();
    else
      net_.backward(tape, dz, grad, nullptr);
  }
  return total / static_cast<double>(n);
}

template <typename Scalar>
double FocusModule<Scalar>::update(const sac::SacAgent<Scalar>& agent, const Matrix& obs, const Matrix& a_reg,
                                   Rng& rng) {
  const Matrix a_rl = agent.sample(obs, rng).actions;
  Vector grad;
  const double value = objective(agent, obs, a_reg, a_rl, &grad);
  if (!std::isfinite(value)) throw NumericalFault("focus objective is not finite after " + std::to_string(updates_) + " updates");
  optimizer_.learning_rate = options_.learning_rate;
  approx::adam_step(optimizer_, mutable_params(), grad, /*ascend=*/true);
  ++updates_;
  return value;
}

template <typename Scalar>
typename FocusModule<Scalar>::Matrix FocusModule<Scalar>::sample_box(int count, Rng& rng) const {
  std::uniform_real_distribution<double> u(-options_.pretrain_box, options_.pretrain_box);
  Matrix obs(obs_dim_, count);
  for (int c = 0; c < count; ++c)
    for (int r = 0; r < obs_dim_; ++r) obs(r, c) = static_cast<Scalar>(u(rng));
  return obs;
}

template <typename Scalar>
double FocusModule<Scalar>::min_beta_on_box(int samples, Rng& rng) const {
  return static_cast<double>(beta(sample_box(samples, rng)).minCoeff());
}

template <typename Scalar>
PretrainReport FocusModule<Scalar>::pretrain(Rng& rng) {
  const Matrix validation = sample_box(options_.validation_samples, rng);
  optimizer_ = approx::AdamState<Scalar>(params().size(), options_.pretrain_learning_rate);
  PretrainReport report;
  for (int step = 0; step <= options_.pretrain_max_steps; ++step) {
    if (step % options_.check_every == 0) {
      report.min_validation_beta = static_cast<double>(beta(validation).minCoeff());
      report.steps = step;
      if (report.min_validation_beta >= options_.threshold) break;
      if (step == options_.pretrain_max_steps)
        throw ConfigError("focus pretraining did not reach min beta " + std::to_string(options_.threshold) +
                          " within " + std::to_string(step) + " steps (reached " +
                          std::to_string(report.min_validation_beta) + ")");
    }
    const Matrix obs = sample_box(options_.pretrain_batch, rng);
    approx::Tape<Scalar> tape;
    const Matrix z = logits(obs, &tape);
    const Matrix b = squash_weight(z, options_.clamp);
    const Scalar n = static_cast<Scalar>(b.size());
    report.final_loss = static_cast<double>((b.array() - Scalar(1)).square().sum() / n);
    const Matrix dz = (Scalar(2) * (b.array() - Scalar(1)) * Scalar(0.5) * (Scalar(1) - z.array().tanh().square())).matrix() /
                      n;
    Vector grad;
    if (options_.scalar)
      grad = dz.rowwise().sum();
    else
      net_.backward(tape, dz, &grad, nullptr);
    approx::adam_step(optimizer_, mutable_params(), grad);
  }
  optimizer_ = approx::AdamState<Scalar>(params().size(), options_.learning_rate);
  updates_ = 0;
  return report;
}

template <typename Scalar>
nlohmann::json FocusModule<Scalar>::to_json() const {
  return {{"obs_dim", obs_dim_},
          {"action_dim", action_dim_},
          {"options", focus::to_json(options_)},
          {"net", approx::to_json(net_)},
          {"scalar_logits", approx::vector_to_json(scalar_logits_)},
          {"optimizer", approx::to_json(optimizer_)},
          {"updates", updates_}};
}

template <typename Scalar>
FocusModule<Scalar> FocusModule<Scalar>::from_json(const nlohmann::json& j) {
  try {
    FocusModule f;
    f.obs_dim_ = j.at("obs_dim").get<int>();
    f.action_dim_ = j.at("action_dim").get<int>();
    f.options_ = focus_options_from_json(j.at("options"));
    f.net_ = approx::net_from_json<Scalar>(j.at("net"));
    f.scalar_logits_ = approx::vector_from_json<Scalar>(j.at("scalar_logits"));
    f.optimizer_ = approx::adam_from_json<Scalar>(j.at("optimizer"));
    f.updates_ = j.at("updates").get<long>();
    if (f.net_.input_size() != f.obs_dim_ || f.net_.output_size() != f.action_dim_ ||
        f.scalar_logits_.size() != f.action_dim_ || f.optimizer_.first_moment.size() != f.params().size())
      throw ConfigError("checkpoint: focus module shapes do not match the recorded dimensions");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed focus module: ") + e.what());
  }
}

template class FocusModule<float>;
template class FocusModule<double>;

}  // namespace rlar::focus
