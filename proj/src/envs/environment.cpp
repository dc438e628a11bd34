#include <rlar/envs/environment.hpp>

#include <sstream>

namespace rlar::envs {

Environment::Environment(std::shared_ptr<const Plant> plant, approx::Rk4Stepper stepper, int max_steps)
    : plant_(std::move(plant)), stepper_(stepper), max_steps_(max_steps) {
  if (!plant_) throw ConfigError("Environment needs a plant");
  if (max_steps_ < 1) throw ConfigError("episode step limit must be positive");
  stepper_.dt = plant_->dt();
  stepper_.validate();
}

Vecd Environment::reset() {
  auto [state, obs] = env_reset(*plant_);
  state_ = std::move(state);
  obs_ = std::move(obs);
  steps_ = 0;
  done_ = false;
  return obs_;
}

StepResult Environment::step(const Vecd& action) {
  if (done_) throw ConfigError("Environment::step called on a finished episode; call reset()");
  if (!plant_->action_space().contains(action)) {
    std::ostringstream msg;
    msg << "action outside the action space: " << action.transpose();
    throw ConfigError(msg.str());
  }
  const Vecd previous = state_.x;
  StepResult out;
  bool finite = true;
  try {
    state_.x = plant_->step(stepper_, state_.x, action, state_.t);
    finite = state_.x.allFinite();
  } catch (const EnvironmentFault& fault) {
    state_.x = fault.state();
    finite = false;
  }
  state_.t += stepper_.dt;
  ++steps_;
  obs_ = plant_->observe(state_.x, &previous, state_.t);
  out.obs = obs_;
  out.failed = !finite || !plant_->is_safe(state_.x);
  out.reward = finite ? plant_->reward(state_.x) : plant_->safety().penalty;
  out.done = out.failed || steps_ >= max_steps_;
  done_ = out.done;
  return out;
}

std::pair<EnvState, Vecd> env_reset(const Plant& plant) {
  EnvState s{plant.initial_state(), 0.0};
  Vecd obs = plant.observe(s.x, nullptr, 0.0);
  return {std::move(s), std::move(obs)};
}

}  // namespace rlar::envs
