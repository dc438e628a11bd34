#include <rlar/approx/checkpoint.hpp>
#include <rlar/envs/environment.hpp>
#include <rlar/focus/focus_module.hpp>
#include <rlar/regularizer/regularizer.hpp>
#include <rlar/replay/replay_buffer.hpp>
#include <rlar/sac/sac_agent.hpp>
#include <rlar/trainer/trainer.hpp>

#include <chrono>
#include <sstream>

namespace rlar::trainer {
namespace {

using nlohmann::json;

template <typename Scalar>
class Runner {
 public:
  Runner(const RunConfig& config, std::uint64_t seed)
      : config_(config),
        rng_(seed),
        model_(build_plant(config, config.model_params)),
        plant_(build_plant(config, config.env_params)),
        env_(plant_, approx::Rk4Stepper{plant_->dt(), 10}, config.episode_steps),
        regularizer_(regularizer::MpcProblem(model_, config.mpc)),
        buffer_(config.replay_capacity) {}

  const envs::ActionSpace& box() const { return plant_->action_space(); }
  int obs_dim() const { return plant_->obs_dim(); }
  int action_dim() const { return plant_->action_dim(); }

  void build_learners(const std::optional<json>& focus_init, std::optional<double>* pretrain_min_beta) {
    if (!uses_learning(config_)) return;
    agent_.emplace(obs_dim(), box().half_width(), config_.sac, rng_);
    if (!uses_focus(config_)) return;
    if (focus_init) {
      focus_ = focus::FocusModule<Scalar>::from_json(*focus_init);
      check_focus_shape();
      return;
    }
    focus_.emplace(obs_dim(), action_dim(), effective_focus_options(config_), rng_);
    const auto report = focus_->pretrain(rng_);
    if (pretrain_min_beta) *pretrain_min_beta = report.min_validation_beta;
  }

  void load_learners(const json& payload) {
    if (uses_learning(config_)) {
      if (!payload.contains("agent") || payload["agent"].is_null())
        throw ConfigError("checkpoint has no learner but the config enables learning");
      agent_ = sac::SacAgent<Scalar>::from_json(payload["agent"]);
      if (agent_->obs_dim() != obs_dim() || agent_->action_dim() != action_dim())
        throw ConfigError("checkpoint learner shapes do not match the configured plant");
    }
    if (uses_focus(config_)) {
      if (!payload.contains("focus") || payload["focus"].is_null())
        throw ConfigError("checkpoint has no focus module but the config blends with the regularizer");
      focus_ = focus::FocusModule<Scalar>::from_json(payload["focus"]);
      check_focus_shape();
    }
  }

  EpisodeRecord episode(int index, bool learn, bool deterministic, std::vector<TrajectoryRow>* trajectory,
                        const TrainOptions* options) {
    EpisodeRecord rec;
    rec.episode = index;
    rec.mean_beta = Vecd::Zero(action_dim());
    Vecd obs = env_.reset();
    if (uses_regularizer(config_)) regularizer_.begin_episode(obs);
    const auto& scale = plant_->observation_scale();
    while (true) {
      const Vecd s = scale.normalize(obs);
      Vecd a_reg = box().center();
      if (uses_regularizer(config_)) {
        const auto st = regularizer_.act(obs);
        a_reg = st.action;
        rec.mpc_iterations += st.iterations;
        ++rec.mpc_solves;
        rec.mpc_nonconverged += st.converged ? 0 : 1;
        rec.mpc_cache_hits += st.cache_hit ? 1 : 0;
        rec.max_mpc_violation = std::max(rec.max_mpc_violation, st.max_violation);
      }
      Vecd a_rl = a_reg;
      Vecd beta = Vecd::Ones(action_dim());
      Vecd action = a_reg;
      if (uses_learning(config_)) {
        const Mat<Scalar> sm = s.cast<Scalar>();
        const Mat<Scalar> y = deterministic ? agent_->deterministic(sm) : agent_->sample(sm, rng_).actions;
        a_rl = box().clip(box().denormalize(y.col(0).template cast<double>()));
        beta = focus_ ? Vecd(focus_->beta(sm).col(0).template cast<double>()) : Vecd::Zero(action_dim());
        action = focus::blend_action(beta, a_reg, a_rl, box().low, box().high);
      }
      if (!box().contains(action)) {
        std::ostringstream msg;
        msg << "executed action left the action space: " << action.transpose();
        throw NumericalFault(msg.str());
      }
      const envs::StepResult r = env_.step(action);
      if (uses_regularizer(config_)) regularizer_.advance(action);
      rec.episode_return += r.reward;
      rec.mean_beta += beta;
      ++rec.steps;
      if (trajectory)
        trajectory->push_back({index, rec.steps, env_.state().t, env_.state().x, r.obs, action, a_reg, a_rl, beta,
                               r.reward, r.done, r.failed});
      if (learn) {
        buffer_.push({s, action, scale.normalize(r.obs), r.reward, r.failed, a_reg});
        ++total_steps_;
        if (total_steps_ >= config_.learning_starts) learn_step(options);
      }
      obs = r.obs;
      if (r.done) {
        rec.failed = r.failed;
        break;
      }
    }
    rec.normalized_return = rec.episode_return / rec.steps;
    rec.mean_beta /= rec.steps;
    return rec;
  }

  json checkpoint(int episodes_completed, std::uint64_t seed) const {
    json payload = {{"kind", "rlar-run"},
                    {"config", to_json(config_)},
                    {"config_hash", config_hash(config_)},
                    {"seed", seed},
                    {"precision", config_.precision},
                    {"mode", mode_name(config_.ablation)},
                    {"episodes_completed", episodes_completed},
                    {"total_steps", total_steps_},
                    {"updates", updates_}};
    payload["agent"] = agent_ ? agent_->to_json() : json(nullptr);
    payload["focus"] = focus_ ? focus_->to_json() : json(nullptr);
    return approx::make_checkpoint(std::move(payload));
  }

  long total_steps() const { return total_steps_; }
  long updates() const { return updates_; }

 private:
  void check_focus_shape() const {
    if (focus_->obs_dim() != obs_dim() || focus_->action_dim() != action_dim())
      throw ConfigError("focus module shapes do not match the configured plant");
    if (focus_->scalar() != config_.ablation.scalar_beta)
      throw ConfigError("focus module mode (scalar/state-dependent) does not match the config");
  }

  void learn_step(const TrainOptions* options) {
    const int n = config_.batch_size;
    const auto idx = buffer_.sample_indices(static_cast<std::size_t>(n), rng_);
    sac::SacBatch<Scalar> batch;
    batch.obs.resize(obs_dim(), n);
    batch.next_obs.resize(obs_dim(), n);
    batch.actions.resize(action_dim(), n);
    batch.rewards.resize(n);
    batch.dones.resize(n);
    Mat<Scalar> a_reg(action_dim(), n);
    for (int c = 0; c < n; ++c) {
      const auto& t = buffer_.at(idx[c]);
      batch.obs.col(c) = t.obs.template cast<Scalar>();
      batch.next_obs.col(c) = t.next_obs.template cast<Scalar>();
      batch.actions.col(c) = box().normalize(t.action).cwiseMax(-1.0).cwiseMin(1.0).template cast<Scalar>();
      batch.rewards[c] = static_cast<Scalar>(t.reward);
      batch.dones[c] = t.done ? Scalar(1) : Scalar(0);
      a_reg.col(c) = box().normalize(t.a_reg).cwiseMax(-1.0).cwiseMin(1.0).template cast<Scalar>();
    }
    agent_->train_step(batch, rng_);
    if (focus_) focus_->update(*agent_, batch.obs, a_reg, rng_);
    ++updates_;
    if (options && options->on_update) {
      Vecd all(agent_->q1().param_count() + agent_->q2().param_count() + agent_->policy().param_count() +
               (focus_ ? focus_->params().size() : 0));
      Eigen::Index o = 0;
      auto put = [&](const Vec<Scalar>& p) {
        all.segment(o, p.size()) = p.template cast<double>();
        o += p.size();
      };
      put(agent_->q1().params());
      put(agent_->q2().params());
      put(agent_->policy().params());
      if (focus_) put(focus_->params());
      options->on_update(updates_, all);
    }
  }

  const RunConfig& config_;
  Rng rng_;
  std::shared_ptr<envs::Plant> model_;
  std::shared_ptr<envs::Plant> plant_;
  envs::Environment env_;
  regularizer::SafetyRegularizer regularizer_;
  replay::ReplayBuffer buffer_;
  std::optional<sac::SacAgent<Scalar>> agent_;
  std::optional<focus::FocusModule<Scalar>> focus_;
  long total_steps_ = 0;
  long updates_ = 0;
};

template <typename Scalar>
RunResult train_impl(const RunConfig& config, std::uint64_t seed, const TrainOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.seed = seed;
  Runner<Scalar> runner(config, seed);
  runner.build_learners(options.focus_init, &result.pretrain_min_beta);
  const int episodes = options.episodes.value_or(config.episodes);
  int completed = 0;
  try {
    for (int e = 0; e < episodes; ++e) {
      auto rec = runner.episode(e, /*learn=*/uses_learning(config), /*deterministic=*/false,
                                options.record_trajectory ? &result.trajectory : nullptr, &options);
      result.episodes.push_back(rec);
      completed = e + 1;
      if (options.on_episode) options.on_episode(rec);
      if (!options.checkpoint_dir.empty() && config.checkpoint_every > 0 && completed % config.checkpoint_every == 0)
        approx::write_json_file(options.checkpoint_dir / ("checkpoint_ep" + std::to_string(completed) + ".json"),
                                runner.checkpoint(completed, seed));
      if (rec.failed && config.stop_on_failure) break;
    }
  } catch (const NumericalFault& e) {
    result.error = std::string("numerical fault: ") + e.what();
  } catch (const EnvironmentFault& e) {
    std::ostringstream msg;
    msg << "environment fault: " << e.what() << " at state " << e.state().transpose();
    result.error = msg.str();
  }
  result.checkpoint = runner.checkpoint(completed, seed);
  result.total_steps = runner.total_steps();
  result.updates = runner.updates();
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

template <typename Scalar>
EvalResult evaluate_impl(const RunConfig& config, const json& payload) {
  Runner<Scalar> runner(config, payload.value("seed", std::uint64_t{0}));
  runner.load_learners(payload);
  EvalResult out;
  out.record = runner.episode(0, /*learn=*/false, /*deterministic=*/true, &out.trajectory, nullptr);
  return out;
}

}  // namespace

RunResult train_rlar(const RunConfig& config, std::uint64_t seed, const TrainOptions& options) {
  if (config.precision == "float") return train_impl<float>(config, seed, options);
  return train_impl<double>(config, seed, options);
}

EvalResult evaluate(const RunConfig& config, const json& checkpoint) {
  const json payload = approx::open_checkpoint(checkpoint);
  if (payload.value("kind", std::string{}) != "rlar-run") throw ConfigError("checkpoint is not a training run");
  const auto& recorded = payload.at("config");
  if (recorded.at("plant").get<std::string>() != envs::to_string(config.plant))
    throw ConfigError("checkpoint was trained on plant '" + recorded.at("plant").get<std::string>() +
                      "', config names '" + envs::to_string(config.plant) + "'");
  if (payload.at("mode").get<std::string>() != mode_name(config.ablation))
    throw ConfigError("checkpoint mode '" + payload.at("mode").get<std::string>() + "' differs from config mode '" +
                      mode_name(config.ablation) + "'");
  const std::string precision = payload.value("precision", std::string{"double"});
  if (precision == "float") return evaluate_impl<float>(config, payload);
  return evaluate_impl<double>(config, payload);
}

json pretrain_focus(const RunConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  auto plant = build_plant(config, config.env_params);
  auto build = [&](auto tag) {
    using Scalar = decltype(tag);
    focus::FocusModule<Scalar> f(plant->obs_dim(), plant->action_dim(), effective_focus_options(config), rng);
    const auto report = f.pretrain(rng);
    json j = f.to_json();
    j["pretrain"] = {{"steps", report.steps},
                     {"min_validation_beta", report.min_validation_beta},
                     {"final_loss", report.final_loss},
                     {"seed", seed},
                     {"precision", config.precision}};
    return j;
  };
  return config.precision == "float" ? build(float{}) : build(double{});
}

}  // namespace rlar::trainer
