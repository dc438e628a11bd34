#pragma once

#include <rlar/envs/plant.hpp>

#include <memory>

namespace rlar::envs {

struct EnvState {
  Vecd x;
  double t = 0.0;
};

struct StepResult {
  Vecd obs;
  double reward = 0.0;
  bool done = false;
  bool failed = false;
};

/// Episodic wrapper over a plant: resets to the plant's initial state,
/// integrates one dt per step, scores the new state, and ends the episode
/// on a safety violation or at the step limit.
class Environment {
 public:
  Environment(std::shared_ptr<const Plant> plant, approx::Rk4Stepper stepper, int max_steps);

  Vecd reset();
  StepResult step(const Vecd& action);

  const Plant& plant() const { return *plant_; }
  std::shared_ptr<const Plant> plant_ptr() const { return plant_; }
  const approx::Rk4Stepper& stepper() const { return stepper_; }
  const EnvState& state() const { return state_; }
  const Vecd& observation() const { return obs_; }
  int steps() const { return steps_; }
  int max_steps() const { return max_steps_; }

 private:
  std::shared_ptr<const Plant> plant_;
  approx::Rk4Stepper stepper_;
  int max_steps_;
  EnvState state_;
  Vecd obs_;
  int steps_ = 0;
  bool done_ = true;
};

/// Initial state and observation of a fresh episode.
std::pair<EnvState, Vecd> env_reset(const Plant& plant);

}  // namespace rlar::envs
